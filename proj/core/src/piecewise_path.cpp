#include "rstop/piecewise_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rstop {

PayoffPath PayoffPath::step(double value_at_zero, std::vector<double> times,
                            std::vector<double> values) {
  if (times.size() != values.size()) {
    throw std::invalid_argument("PayoffPath::step: one value per breakpoint required");
  }
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) {
      throw std::invalid_argument("PayoffPath::step: breakpoints must be strictly increasing");
    }
    prev = t;
  }
  if (!std::isfinite(value_at_zero)) {
    throw std::invalid_argument("PayoffPath::step: non-finite sample");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("PayoffPath::step: non-finite sample");
  }
  PayoffPath p;
  p.value_at_zero_ = value_at_zero;
  p.horizon_ = times.empty() ? 0.0 : times.back();
  p.times_ = std::move(times);
  p.values_ = std::move(values);
  return p;
}

PayoffPath PayoffPath::smooth(std::function<double(double)> f, double horizon,
                              std::vector<double> kinks) {
  if (!f) throw std::invalid_argument("PayoffPath::smooth: empty callable");
  if (!(horizon >= 0.0)) throw std::invalid_argument("PayoffPath::smooth: negative horizon");
  std::sort(kinks.begin(), kinks.end());
  PayoffPath p;
  p.fn_ = std::move(f);
  p.horizon_ = horizon;
  p.times_ = std::move(kinks);
  return p;
}

double PayoffPath::operator()(double t) const {
  if (fn_) {
    const double v = fn_(std::clamp(t, 0.0, horizon_));
    if (!std::isfinite(v)) {
      throw std::domain_error("PayoffPath: non-finite sample at t = " + std::to_string(t));
    }
    return v;
  }
  if (t <= 0.0 || times_.empty()) {
    return times_.empty() || t <= 0.0 ? value_at_zero_ : values_.back();
  }
  // value on (times[k-1], times[k]] is values[k]; constant past the end.
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) return values_.back();
  return values_[static_cast<std::size_t>(it - times_.begin())];
}

double PayoffPath::max_abs() const {
  if (fn_) {
    throw std::logic_error("PayoffPath::max_abs: only available for step paths");
  }
  double m = std::abs(value_at_zero_);
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace rstop
