#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

namespace rstop::detail {

// Adaptive Gauss-Kronrod over [a, b], split at the given interior breakpoints
// (kinks, jump locations) so each panel sees a smooth integrand.
template <class F>
double integrate(const F& f, double a, double b, const std::vector<double>& breakpoints = {},
                 double rel_tol = 1e-11) {
  if (!(a < b)) return 0.0;
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double t : breakpoints) {
    if (t > a && t < b) cuts.push_back(t);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += gk::integrate(f, cuts[i], cuts[i + 1], 15, rel_tol);
  }
  return total;
}

}  // namespace rstop::detail
