#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rstop {

/// A scalar payoff path on [0, horizon], extended constantly beyond the
/// horizon. Two flavours:
///
///   - step: value_at_zero at t = 0 and value k on the left-open cell
///     (times[k-1], times[k]] (times[-1] read as 0). Integrals against step
///     paths are computed in closed form.
///   - smooth: an arbitrary callable, with declared kink locations so
///     integrators can split panels.
class PayoffPath {
 public:
  static PayoffPath step(double value_at_zero, std::vector<double> times,
                         std::vector<double> values);
  static PayoffPath smooth(std::function<double(double)> f, double horizon,
                           std::vector<double> kinks = {});
  static PayoffPath constant(double value) { return step(value, {}, {}); }

  double operator()(double t) const;
  bool is_step() const { return !fn_; }
  double horizon() const { return horizon_; }

  /// Step times, or declared kinks for smooth paths.
  std::span<const double> breakpoints() const { return times_; }

  /// Step paths only.
  std::span<const double> step_values() const { return values_; }
  double value_at_zero() const { return value_at_zero_; }
  double max_abs() const;

 private:
  PayoffPath() = default;

  std::function<double(double)> fn_;  // empty for step paths
  double horizon_ = 0.0;
  double value_at_zero_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace rstop
