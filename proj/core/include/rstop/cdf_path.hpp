#pragma once

#include <vector>

#include "rstop/piecewise_path.hpp"

namespace rstop {

/// A right-continuous nondecreasing distribution function on [0, horizon]
/// with F(0-) = 0 and F(horizon) = 1: the law of a randomized stopping time.
/// Stored as an ordered list of pieces -- point masses, constant-hazard
/// (exponential-survival) segments and constant-density segments -- so that
/// the integrals and inverses used by the theorem checks evaluate in closed
/// form wherever possible.
class CdfPath {
 public:
  enum class PieceKind { jump, exponential_segment, linear_segment };

  struct Piece {
    PieceKind kind;
    double start = 0.0;
    double end = 0.0;    // == start for jumps
    double param = 0.0;  // hazard rate, or density slope; unused for jumps
    double mass = 0.0;     // jump mass, or F(end-) - F(start)
    double f_start = 0.0;  // F immediately before this piece
  };

  /// All mass at one instant.
  static CdfPath point_mass(double time, double horizon);

  /// Pure-jump distribution from (time, mass) pairs; masses must total 1
  /// within 1e-12, times must be nondecreasing in [0, horizon].
  static CdfPath from_jumps(std::vector<std::pair<double, double>> jumps, double horizon);

  /// F(t) = t / horizon.
  static CdfPath uniform(double horizon);

  /// Constant hazard: F(t) = 1 - exp(-rate t) on [0, horizon), residual mass
  /// placed as a jump at the horizon.
  static CdfPath constant_hazard(double rate, double horizon);

  double horizon() const { return horizon_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  bool is_pure_jump() const;

  /// F(t), right-continuous.
  double value(double t) const;

  /// Times where F jumps (including any terminal jump).
  std::vector<double> jump_times() const;

 private:
  friend class CdfBuilder;
  CdfPath() = default;

  double horizon_ = 0.0;
  std::vector<Piece> pieces_;
};

/// Appends pieces left to right; finish() validates order, nonnegativity and
/// total mass 1 within 1e-12.
class CdfBuilder {
 public:
  explicit CdfBuilder(double horizon);
  CdfBuilder& jump(double time, double mass);
  CdfBuilder& exponential_segment(double start, double end, double rate);
  CdfBuilder& linear_segment(double start, double end, double density);
  CdfPath finish();

 private:
  double horizon_;
  double cursor_ = 0.0;  // time reached so far
  double f_ = 0.0;       // F reached so far
  std::vector<CdfPath::Piece> pieces_;
};

/// A stopping intensity: nonnegative rate, piecewise constant on a time grid
/// covering [0, horizon], capped at `cap`. Divergence of the total hazard
/// beyond the horizon is realized downstream by a terminal jump carrying the
/// residual survival mass.
class IntensityPath {
 public:
  /// times = t_0 < ... < t_M with t_0 = 0; rates holds one value per cell.
  IntensityPath(std::vector<double> times, std::vector<double> rates, double cap);

  double horizon() const { return times_.back(); }
  double cap() const { return cap_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& rates() const { return rates_; }

  /// Total hazard accumulated on [0, horizon].
  double total_hazard() const;

 private:
  std::vector<double> times_;
  std::vector<double> rates_;
  double cap_ = 0.0;
};

/// F(t) = 1 - exp(-integral of the rate up to t), computed exactly per cell,
/// with the residual survival mass appended as a jump at the horizon.
CdfPath intensity_to_cdf(const IntensityPath& intensity);

/// Generalized inverse beta(r) = inf{t >= 0 : F(t) >= r}, r in [0, 1).
/// At flat stretches the left endpoint is returned.
double time_change(const CdfPath& cdf, double level);

/// integral of h dF: jumps summed exactly, step integrands against segments
/// in closed form, smooth integrands by adaptive quadrature (relative
/// tolerance 1e-9 or better).
double stieltjes_integral(const PayoffPath& h, const CdfPath& cdf);

/// integral over r in [0,1) of h(beta(r)) dr. Exact whenever both h and F
/// are step objects; quadrature in the level variable otherwise.
double time_change_integral(const PayoffPath& h, const CdfPath& cdf);

/// integral of |a - b| dF. Point values at F's jump times use the paths' own
/// evaluation conventions.
double stieltjes_distance(const PayoffPath& a, const PayoffPath& b, const CdfPath& cdf);

/// The hazard-cap approximation of stopping at a deterministic time:
/// F_n(t) = 1 - exp(-cap (t - stop_time)) for t >= stop_time, full mass on
/// [stop_time, infinity). `value` is the integral of h against dF_n computed
/// directly; the three terms decompose it around a window of width `window`
/// past the stop time, and sum back to `value` within 1e-9.
struct HazardCapApproximation {
  double value = 0.0;       // integral of h dF_n
  double stop_term = 0.0;   // h(stop_time) (1 - e^{-cap window})
  double local_term = 0.0;  // deviation of h from h(stop_time) inside the window
  double tail_term = 0.0;   // mass beyond the window; |tail| <= sup|h| e^{-cap window}
};

HazardCapApproximation exponential_approximation(double stop_time, double cap,
                                                 const PayoffPath& h, double window);

}  // namespace rstop
