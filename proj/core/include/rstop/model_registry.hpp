#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rstop/diffusion.hpp"

namespace rstop {

struct ModelInfo {
  std::string name;
  std::string description;
};

/// Built-in closed-form models selectable by name from experiment configs.
std::vector<ModelInfo> model_registry();

/// Instantiates a registry model. Unknown names and invalid parameters throw
/// std::invalid_argument.
DiffusionModel make_model(const std::string& name, const nlohmann::json& params);

/// Families used by the diffusion experiments: a single passive control,
/// threshold stop regions (plus "never"), and bang-bang intensities
/// cap * 1{region} for each cap and region. Regions are |x| >= b for the
/// given thresholds when `region_below` is false, x <= b otherwise.
PolicyFamilies threshold_families(std::vector<double> caps, std::vector<double> thresholds,
                                  bool region_below = false);

}  // namespace rstop
