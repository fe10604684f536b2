#include "rstop/cdf_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quadrature.hpp"

namespace rstop {

namespace {

constexpr double kMassTol = 1e-12;

// Mass accumulated by `piece` on [piece.start, t], t inside the piece.
double partial_mass(const CdfPath::Piece& piece, double t) {
  switch (piece.kind) {
    case CdfPath::PieceKind::jump:
      return piece.mass;
    case CdfPath::PieceKind::exponential_segment:
      if (t >= piece.end) return piece.mass;
      return (1.0 - piece.f_start) * -std::expm1(-piece.param * (t - piece.start));
    case CdfPath::PieceKind::linear_segment:
      if (t >= piece.end) return piece.mass;
      return piece.param * (t - piece.start);
  }
  return 0.0;
}

// Density of an absolutely continuous piece at t.
double density(const CdfPath::Piece& piece, double t) {
  if (piece.kind == CdfPath::PieceKind::exponential_segment) {
    return piece.param * (1.0 - piece.f_start) * std::exp(-piece.param * (t - piece.start));
  }
  return piece.param;
}

// First time within the piece at which F reaches `level`; the piece is known
// to carry enough mass.
double invert_within(const CdfPath::Piece& piece, double level) {
  double t = piece.start;
  if (piece.kind == CdfPath::PieceKind::exponential_segment) {
    t = piece.start + std::log((1.0 - piece.f_start) / (1.0 - level)) / piece.param;
  } else if (piece.kind == CdfPath::PieceKind::linear_segment) {
    t = piece.start + (level - piece.f_start) / piece.param;
  }
  return std::clamp(t, piece.start, piece.end);
}

// Closed-form integral of a step path against one AC piece.
double step_against_piece(const PayoffPath& h, const CdfPath::Piece& piece) {
  std::vector<double> cuts;
  cuts.push_back(piece.start);
  for (double t : h.breakpoints()) {
    if (t > piece.start && t < piece.end) cuts.push_back(t);
  }
  cuts.push_back(piece.end);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double dm = partial_mass(piece, cuts[i + 1]) - partial_mass(piece, cuts[i]);
    total += h(0.5 * (cuts[i] + cuts[i + 1])) * dm;
  }
  return total;
}

}  // namespace

CdfPath CdfPath::point_mass(double time, double horizon) {
  return CdfBuilder(horizon).jump(time, 1.0).finish();
}

CdfPath CdfPath::from_jumps(std::vector<std::pair<double, double>> jumps, double horizon) {
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  CdfBuilder builder(horizon);
  for (const auto& [time, mass] : jumps) builder.jump(time, mass);
  return builder.finish();
}

CdfPath CdfPath::uniform(double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("CdfPath::uniform: horizon must be > 0");
  return CdfBuilder(horizon).linear_segment(0.0, horizon, 1.0 / horizon).finish();
}

CdfPath CdfPath::constant_hazard(double rate, double horizon) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("CdfPath::constant_hazard: horizon must be > 0");
  }
  CdfBuilder builder(horizon);
  builder.exponential_segment(0.0, horizon, rate);
  builder.jump(horizon, std::exp(-rate * horizon));
  return builder.finish();
}

bool CdfPath::is_pure_jump() const {
  for (const auto& piece : pieces_) {
    if (piece.kind != PieceKind::jump && piece.mass != 0.0) return false;
  }
  return true;
}

double CdfPath::value(double t) const {
  double f = 0.0;
  for (const auto& piece : pieces_) {
    if (piece.kind == PieceKind::jump) {
      if (piece.start > t) break;
      f += piece.mass;
    } else {
      if (piece.start >= t) break;
      f += partial_mass(piece, std::min(t, piece.end));
      if (piece.end > t) break;
    }
  }
  return f;
}

std::vector<double> CdfPath::jump_times() const {
  std::vector<double> times;
  for (const auto& piece : pieces_) {
    if (piece.kind == PieceKind::jump && piece.mass > 0.0) times.push_back(piece.start);
  }
  return times;
}

CdfBuilder::CdfBuilder(double horizon) : horizon_(horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("CdfBuilder: horizon must be finite and nonnegative");
  }
}

CdfBuilder& CdfBuilder::jump(double time, double mass) {
  if (!(time >= cursor_) || time > horizon_) {
    throw std::invalid_argument("CdfBuilder::jump: pieces must be appended left to right");
  }
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("CdfBuilder::jump: mass must be nonnegative");
  }
  CdfPath::Piece piece;
  piece.kind = CdfPath::PieceKind::jump;
  piece.start = piece.end = time;
  piece.mass = mass;
  piece.f_start = f_;
  pieces_.push_back(piece);
  cursor_ = time;
  f_ += mass;
  return *this;
}

CdfBuilder& CdfBuilder::exponential_segment(double start, double end, double rate) {
  if (!(start >= cursor_) || !(end > start) || end > horizon_) {
    throw std::invalid_argument("CdfBuilder::exponential_segment: bad interval");
  }
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("CdfBuilder::exponential_segment: rate must be nonnegative");
  }
  CdfPath::Piece piece;
  piece.kind = CdfPath::PieceKind::exponential_segment;
  piece.start = start;
  piece.end = end;
  piece.param = rate;
  piece.f_start = f_;
  piece.mass = (1.0 - f_) * -std::expm1(-rate * (end - start));
  pieces_.push_back(piece);
  cursor_ = end;
  f_ += piece.mass;
  return *this;
}

CdfBuilder& CdfBuilder::linear_segment(double start, double end, double density) {
  if (!(start >= cursor_) || !(end > start) || end > horizon_) {
    throw std::invalid_argument("CdfBuilder::linear_segment: bad interval");
  }
  if (!(density >= 0.0) || !std::isfinite(density)) {
    throw std::invalid_argument("CdfBuilder::linear_segment: density must be nonnegative");
  }
  CdfPath::Piece piece;
  piece.kind = CdfPath::PieceKind::linear_segment;
  piece.start = start;
  piece.end = end;
  piece.param = density;
  piece.f_start = f_;
  piece.mass = density * (end - start);
  pieces_.push_back(piece);
  cursor_ = end;
  f_ += piece.mass;
  return *this;
}

CdfPath CdfBuilder::finish() {
  if (std::abs(f_ - 1.0) > kMassTol) {
    throw std::invalid_argument("CdfBuilder::finish: total mass " + std::to_string(f_) +
                                " differs from 1");
  }
  CdfPath cdf;
  cdf.horizon_ = horizon_;
  cdf.pieces_ = std::move(pieces_);
  return cdf;
}

IntensityPath::IntensityPath(std::vector<double> times, std::vector<double> rates, double cap)
    : times_(std::move(times)), rates_(std::move(rates)), cap_(cap) {
  if (times_.size() < 2 || times_.front() != 0.0) {
    throw std::invalid_argument("IntensityPath: grid must start at 0 and cover a cell");
  }
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i + 1] > times_[i])) {
      throw std::invalid_argument("IntensityPath: grid must be strictly increasing");
    }
  }
  if (rates_.size() + 1 != times_.size()) {
    throw std::invalid_argument("IntensityPath: one rate per grid cell required");
  }
  if (!(cap_ >= 0.0) || !std::isfinite(cap_)) {
    throw std::invalid_argument("IntensityPath: cap must be finite and nonnegative");
  }
  for (double r : rates_) {
    if (!(r >= 0.0) || r > cap_) {
      throw std::invalid_argument("IntensityPath: rates must lie in [0, cap]");
    }
  }
}

double IntensityPath::total_hazard() const {
  double total = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    total += rates_[i] * (times_[i + 1] - times_[i]);
  }
  return total;
}

CdfPath intensity_to_cdf(const IntensityPath& intensity) {
  CdfBuilder builder(intensity.horizon());
  double f = 0.0;
  const auto& times = intensity.times();
  const auto& rates = intensity.rates();
  for (std::size_t i = 0; i < rates.size(); ++i) {
    builder.exponential_segment(times[i], times[i + 1], rates[i]);
    f += (1.0 - f) * -std::expm1(-rates[i] * (times[i + 1] - times[i]));
  }
  // Residual survival becomes the terminal jump, making the total mass
  // exactly 1.
  builder.jump(intensity.horizon(), 1.0 - f);
  return builder.finish();
}

double time_change(const CdfPath& cdf, double level) {
  if (!(level >= 0.0) || !(level < 1.0)) {
    throw std::out_of_range("time_change: level must lie in [0, 1)");
  }
  if (level <= 0.0) return 0.0;
  double f = 0.0;
  for (const auto& piece : cdf.pieces()) {
    if (piece.kind == CdfPath::PieceKind::jump) {
      if (f + piece.mass >= level) return piece.start;
    } else if (piece.mass > 0.0 && f + piece.mass >= level) {
      return invert_within(piece, level);
    }
    f += piece.mass;
  }
  return cdf.horizon();
}

double stieltjes_integral(const PayoffPath& h, const CdfPath& cdf) {
  double total = 0.0;
  for (const auto& piece : cdf.pieces()) {
    if (piece.kind == CdfPath::PieceKind::jump) {
      total += piece.mass * h(piece.start);
    } else if (piece.mass != 0.0) {
      if (h.is_step()) {
        total += step_against_piece(h, piece);
      } else {
        std::vector<double> splits(h.breakpoints().begin(), h.breakpoints().end());
        total += detail::integrate([&](double t) { return h(t) * density(piece, t); },
                                   piece.start, piece.end, splits);
      }
    }
  }
  return total;
}

double time_change_integral(const PayoffPath& h, const CdfPath& cdf) {
  double total = 0.0;
  double f = 0.0;
  for (const auto& piece : cdf.pieces()) {
    if (piece.kind == CdfPath::PieceKind::jump) {
      // Plateau of beta: an r-interval of width `mass` mapping to one time.
      total += piece.mass * h(piece.start);
    } else if (piece.mass != 0.0) {
      const double lo = f;
      const double hi = f + piece.mass;
      // Levels at which h switches value inside this piece.
      std::vector<double> levels;
      levels.push_back(lo);
      for (double t : h.breakpoints()) {
        if (t > piece.start && t < piece.end) {
          levels.push_back(lo + partial_mass(piece, t));
        }
      }
      levels.push_back(hi);
      std::sort(levels.begin(), levels.end());
      if (h.is_step()) {
        for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
          const double mid = 0.5 * (levels[i] + levels[i + 1]);
          total += (levels[i + 1] - levels[i]) * h(time_change(cdf, mid));
        }
      } else {
        total += detail::integrate([&](double r) { return h(time_change(cdf, r)); }, lo, hi,
                                   levels);
      }
    }
    f += piece.mass;
  }
  return total;
}

double stieltjes_distance(const PayoffPath& a, const PayoffPath& b, const CdfPath& cdf) {
  const auto diff = [&](double t) { return std::abs(a(t) - b(t)); };
  double total = 0.0;
  for (const auto& piece : cdf.pieces()) {
    if (piece.kind == CdfPath::PieceKind::jump) {
      total += piece.mass * diff(piece.start);
    } else if (piece.mass != 0.0) {
      std::vector<double> cuts(a.breakpoints().begin(), a.breakpoints().end());
      cuts.insert(cuts.end(), b.breakpoints().begin(), b.breakpoints().end());
      if (a.is_step() && b.is_step()) {
        cuts.push_back(piece.start);
        cuts.push_back(piece.end);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::erase_if(cuts, [&](double t) { return t < piece.start || t > piece.end; });
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
          const double dm = partial_mass(piece, cuts[i + 1]) - partial_mass(piece, cuts[i]);
          total += diff(0.5 * (cuts[i] + cuts[i + 1])) * dm;
        }
      } else {
        total += detail::integrate([&](double t) { return diff(t) * density(piece, t); },
                                   piece.start, piece.end, cuts);
      }
    }
  }
  return total;
}

namespace {

// integral of h(t) cap e^{-cap (t - stop_time)} dt over [a, b].
double against_hazard(const PayoffPath& h, double stop_time, double cap, double a, double b) {
  if (!(a < b)) return 0.0;
  const auto survival = [&](double t) { return std::exp(-cap * (t - stop_time)); };
  if (h.is_step()) {
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double t : h.breakpoints()) {
      if (t > a && t < b) cuts.push_back(t);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      total += h(0.5 * (cuts[i] + cuts[i + 1])) * (survival(cuts[i]) - survival(cuts[i + 1]));
    }
    return total;
  }
  std::vector<double> splits(h.breakpoints().begin(), h.breakpoints().end());
  // Geometric refinement near the stop time keeps the boundary layer cheap
  // for large caps.
  for (int k = 1; k <= 64; k *= 2) {
    splits.push_back(stop_time + static_cast<double>(k) / cap);
  }
  return detail::integrate([&](double t) { return h(t) * cap * survival(t); }, a, b, splits,
                           1e-12);
}

}  // namespace

HazardCapApproximation exponential_approximation(double stop_time, double cap,
                                                 const PayoffPath& h, double window) {
  if (!(window > 0.0)) {
    throw std::invalid_argument("exponential_approximation: window must be > 0");
  }
  if (!(cap >= 1.0)) {
    throw std::invalid_argument("exponential_approximation: cap must be >= 1");
  }
  if (!(stop_time >= 0.0)) {
    throw std::invalid_argument("exponential_approximation: stop time must be >= 0");
  }

  const double far = std::max(h.horizon(), stop_time + window);
  const double h_far = h(far);
  const double h_stop = h(stop_time);

  HazardCapApproximation out;
  // Direct route: one integral over the whole support plus the constant
  // extension beyond `far`.
  out.value = against_hazard(h, stop_time, cap, stop_time, far) +
              h_far * std::exp(-cap * (far - stop_time));

  out.stop_term = h_stop * -std::expm1(-cap * window);

  const double window_end = stop_time + window;
  if (h.is_step()) {
    out.local_term = against_hazard(h, stop_time, cap, stop_time, window_end) -
                     h_stop * -std::expm1(-cap * window);
  } else {
    std::vector<double> splits(h.breakpoints().begin(), h.breakpoints().end());
    for (int k = 1; k <= 64; k *= 2) {
      splits.push_back(stop_time + static_cast<double>(k) / cap);
    }
    out.local_term = detail::integrate(
        [&](double t) { return (h(t) - h_stop) * cap * std::exp(-cap * (t - stop_time)); },
        stop_time, window_end, splits, 1e-12);
  }

  out.tail_term = against_hazard(h, stop_time, cap, window_end, std::max(far, window_end)) +
                  h_far * std::exp(-cap * (far - stop_time));
  return out;
}

}  // namespace rstop
