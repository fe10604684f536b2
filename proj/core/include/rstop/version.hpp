#pragma once

namespace rstop {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rstop
