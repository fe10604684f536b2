#include "rstop/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "rstop/counter_rng.hpp"

namespace rstop {

namespace {

// Fixed parallel work unit: block boundaries (and therefore all reductions)
// do not depend on the worker count.
constexpr std::size_t kPathBlock = 4096;

void validate_spec(const DiffusionModel& model, const SimSpec& spec) {
  if (spec.steps < 1) throw std::invalid_argument("SimSpec: steps must be >= 1");
  if (spec.paths < 1) throw std::invalid_argument("SimSpec: paths must be >= 1");
  if (spec.workers < 1) throw std::invalid_argument("SimSpec: workers must be >= 1");
  if (static_cast<int>(spec.start_state.size()) != model.dim) {
    throw std::invalid_argument("SimSpec: start state dimension mismatch");
  }
  if (!(spec.start_time >= 0.0) || spec.start_time > model.horizon) {
    throw std::invalid_argument("SimSpec: start time outside [0, horizon]");
  }
}

struct PathContext {
  std::vector<double> x;
  std::vector<double> x_next;
  std::vector<double> sigma;  // dim x noise_dim scratch
  std::vector<double> mu;     // dim scratch
  std::vector<double> xi;     // noise_dim scratch
};

// Runs the Euler scheme for one path; calls
// on_state(k, t_k, x_k, phi_k, alpha_k) for k = 0..steps (alpha at the final
// grid point is evaluated but unused by integrals) and on_noise(k, xi) after
// drawing each increment. Returns false via exception on blow-up.
template <class StateFn, class NoiseFn>
void run_path(const DiffusionModel& model, const ControlPolicy& control, const SimSpec& spec,
              std::size_t path, StateFn&& on_state, NoiseFn&& on_noise, PathContext& ctx) {
  const int d = model.dim;
  const int dn = model.noise_dim;
  const double dt = (model.horizon - spec.start_time) / spec.steps;
  const double sqrt_dt = std::sqrt(dt);

  ctx.x.assign(spec.start_state.begin(), spec.start_state.end());
  ctx.x_next.assign(static_cast<std::size_t>(d), 0.0);
  ctx.sigma.assign(static_cast<std::size_t>(d * dn), 0.0);
  ctx.mu.assign(static_cast<std::size_t>(d), 0.0);
  ctx.xi.assign(static_cast<std::size_t>(dn), 0.0);

  CounterRng rng(spec.seed, path);
  double phi = 0.0;
  std::uint64_t draw = 0;

  for (int k = 0; k < spec.steps; ++k) {
    const double t = spec.start_time + dt * k;
    const double alpha = control.value(t, ctx.x);
    if (!on_state(k, t, std::span<const double>(ctx.x), phi, alpha)) return;

    model.sigma(alpha, t, ctx.x, ctx.sigma);
    model.drift(alpha, t, ctx.x, ctx.mu);
    for (int j = 0; j < dn; ++j) ctx.xi[static_cast<std::size_t>(j)] = rng.normal(draw++);
    on_noise(k, std::span<const double>(ctx.xi));

    for (int i = 0; i < d; ++i) {
      double dx = ctx.mu[static_cast<std::size_t>(i)] * dt;
      for (int j = 0; j < dn; ++j) {
        dx += ctx.sigma[static_cast<std::size_t>(i * dn + j)] * sqrt_dt *
              ctx.xi[static_cast<std::size_t>(j)];
      }
      ctx.x_next[static_cast<std::size_t>(i)] = ctx.x[static_cast<std::size_t>(i)] + dx;
      if (!std::isfinite(ctx.x_next[static_cast<std::size_t>(i)])) {
        throw std::runtime_error("simulation blow-up: non-finite state on path " +
                                 std::to_string(path) + " at step " + std::to_string(k + 1) +
                                 " (t = " + std::to_string(t + dt) + ")");
      }
    }
    phi += model.discount_rate(alpha, t, ctx.x) * dt;
    ctx.x.swap(ctx.x_next);
  }
  const double t_end = spec.start_time + dt * spec.steps;
  on_state(spec.steps, t_end, std::span<const double>(ctx.x), phi,
           control.value(t_end, ctx.x));
}

double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

// Runs fn(block_begin, block_end, block_index) over fixed-size path blocks on
// `workers` threads; exceptions are captured and rethrown on the caller.
template <class Fn>
void for_each_block(std::size_t paths, int workers, Fn&& fn) {
  const std::size_t blocks = (paths + kPathBlock - 1) / kPathBlock;
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto work = [&] {
    while (true) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      const std::size_t begin = b * kPathBlock;
      const std::size_t end = std::min(paths, begin + kPathBlock);
      try {
        fn(begin, end, b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

Estimate reduce_payoffs(std::span<const double> payoffs) {
  Estimate e;
  e.paths = payoffs.size();
  double sum = 0.0;
  for (double v : payoffs) sum += v;
  e.mean = sum / static_cast<double>(payoffs.size());
  if (payoffs.size() > 1) {
    double ss = 0.0;
    for (double v : payoffs) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(payoffs.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(payoffs.size()));
  }
  return e;
}

}  // namespace

std::span<const double> PathBundle::state(std::size_t path, int k) const {
  const std::size_t offset =
      (path * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(k)) *
      static_cast<std::size_t>(dim);
  return {states.data() + offset, static_cast<std::size_t>(dim)};
}

double PathBundle::discount(std::size_t path, int k) const {
  return discounts[path * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(k)];
}

std::span<const double> PathBundle::increments(std::size_t path, int k) const {
  const std::size_t offset =
      (path * static_cast<std::size_t>(steps) + static_cast<std::size_t>(k)) *
      static_cast<std::size_t>(noise_dim);
  return {noise.data() + offset, static_cast<std::size_t>(noise_dim)};
}

PathBundle simulate_paths(const DiffusionModel& model, const ControlPolicy& control,
                          const SimSpec& spec) {
  validate_spec(model, spec);
  const std::size_t state_doubles = spec.paths * static_cast<std::size_t>(spec.steps + 1) *
                                    static_cast<std::size_t>(model.dim);
  if (state_doubles > (std::size_t{1} << 27)) {
    throw std::invalid_argument(
        "simulate_paths: bundle would be too large; use the streaming estimators");
  }

  PathBundle bundle;
  bundle.start_time = spec.start_time;
  bundle.dt = (model.horizon - spec.start_time) / spec.steps;
  bundle.steps = spec.steps;
  bundle.dim = model.dim;
  bundle.noise_dim = model.noise_dim;
  bundle.paths = spec.paths;
  bundle.seed = spec.seed;
  bundle.states.assign(state_doubles, 0.0);
  bundle.discounts.assign(spec.paths * static_cast<std::size_t>(spec.steps + 1), 0.0);
  bundle.noise.assign(spec.paths * static_cast<std::size_t>(spec.steps) *
                          static_cast<std::size_t>(model.noise_dim),
                      0.0);

  for_each_block(spec.paths, spec.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    PathContext ctx;
    for (std::size_t p = begin; p < end; ++p) {
      run_path(
          model, control, spec, p,
          [&](int k, double, std::span<const double> x, double phi, double) {
            const std::size_t row =
                (p * static_cast<std::size_t>(spec.steps + 1) + static_cast<std::size_t>(k));
            std::copy(x.begin(), x.end(),
                      bundle.states.begin() +
                          static_cast<std::ptrdiff_t>(row * static_cast<std::size_t>(model.dim)));
            bundle.discounts[row] = phi;
            return true;
          },
          [&](int k, std::span<const double> xi) {
            const std::size_t row =
                (p * static_cast<std::size_t>(spec.steps) + static_cast<std::size_t>(k));
            std::copy(xi.begin(), xi.end(),
                      bundle.noise.begin() +
                          static_cast<std::ptrdiff_t>(row *
                                                      static_cast<std::size_t>(model.noise_dim)));
          },
          ctx);
    }
  });
  return bundle;
}

std::vector<Estimate> evaluate_policies(const DiffusionModel& model,
                                        const ControlPolicy& control,
                                        std::span<const StopPolicy> stops,
                                        std::span<const IntensityPolicy> intensities,
                                        const SimSpec& spec) {
  validate_spec(model, spec);
  const std::size_t n_stop = stops.size();
  const std::size_t n_int = intensities.size();
  const std::size_t n_all = n_stop + n_int;
  if (n_all == 0) throw std::invalid_argument("evaluate_policies: no policies given");

  const double dt = (model.horizon - spec.start_time) / spec.steps;
  // The guard watches the strongest declared polynomial moment.
  const double moment_exponent =
      std::max(model.truncation_exponent ? model.truncation_exponent(control.truncation_index)
                                         : 0.0,
               model.growth_exponent);
  const auto moment_of = [moment_exponent](double grown) {
    if (moment_exponent == 0.0) return 1.0;
    if (moment_exponent == 1.0) return grown;
    if (moment_exponent == 2.0) return grown * grown;
    return std::pow(grown, moment_exponent);
  };

  // payoffs[candidate * paths + path]; filled by blocks, reduced in path
  // order afterwards.
  std::vector<double> payoffs(n_all * spec.paths, 0.0);
  const std::size_t blocks = (spec.paths + kPathBlock - 1) / kPathBlock;
  std::vector<double> moment_partial(blocks * static_cast<std::size_t>(spec.steps + 1), 0.0);

  struct StopState {
    bool stopped = false;
    double accrued = 0.0;  // running payoff up to the stop
  };
  struct IntensityState {
    double hazard = 0.0;  // accumulated integral of the rate
    double value = 0.0;
  };

  for_each_block(spec.paths, spec.workers, [&](std::size_t begin, std::size_t end,
                                               std::size_t block) {
    PathContext ctx;
    std::vector<StopState> stop_state(n_stop);
    std::vector<IntensityState> int_state(n_int);
    double* moments = moment_partial.data() + block * static_cast<std::size_t>(spec.steps + 1);

    for (std::size_t p = begin; p < end; ++p) {
      stop_state.assign(n_stop, {});
      int_state.assign(n_int, {});

      run_path(
          model, control, spec, p,
          [&](int k, double t, std::span<const double> x, double phi, double alpha) {
            const bool final_step = (k == spec.steps);
            const double discount = std::exp(-phi);
            const double g = model.terminal_payoff(t, x);
            const double f =
                final_step ? 0.0 : model.running_payoff(alpha, t, x) * discount * dt;

            moments[k] += moment_of(1.0 + euclidean_norm(x));

            bool all_stopped = true;
            for (std::size_t i = 0; i < n_stop; ++i) {
              auto& s = stop_state[i];
              if (s.stopped) continue;
              if (final_step || stops[i].region(t, x)) {
                payoffs[i * spec.paths + p] = s.accrued + g * discount;
                s.stopped = true;
              } else {
                s.accrued += f;
                all_stopped = false;
              }
            }
            for (std::size_t j = 0; j < n_int; ++j) {
              auto& s = int_state[j];
              const double survival = std::exp(-s.hazard);
              if (final_step) {
                // Residual stopping mass settles at the horizon.
                s.value += g * discount * survival;
                payoffs[(n_stop + j) * spec.paths + p] = s.value;
              } else {
                const double rate = intensities[j].rate(t, x);
                if (!(rate >= 0.0) || rate > intensities[j].cap) {
                  throw std::domain_error("intensity policy '" + intensities[j].name +
                                          "' left [0, cap] at t = " + std::to_string(t));
                }
                s.value += (f + rate * g * discount * dt) * survival;
                s.hazard += rate * dt;
                all_stopped = false;
              }
            }
            // Keep stepping while any candidate still accrues value; the
            // moment guard also wants the full grid.
            (void)all_stopped;
            return true;
          },
          [](int, std::span<const double>) {}, ctx);
    }
  });

  // Deterministic reduction: moment guard first (block order), then
  // per-candidate means in path order.
  double max_moment = 0.0;
  for (int k = 0; k <= spec.steps; ++k) {
    double sum = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      sum += moment_partial[b * static_cast<std::size_t>(spec.steps + 1) +
                            static_cast<std::size_t>(k)];
    }
    max_moment = std::max(max_moment, sum / static_cast<double>(spec.paths));
  }
  if (!(max_moment <= spec.moment_bound)) {
    throw std::runtime_error("moment guard tripped: sup_k mean (1+|x|)^m = " +
                             std::to_string(max_moment) + " exceeds the configured bound " +
                             std::to_string(spec.moment_bound));
  }

  std::vector<Estimate> estimates;
  estimates.reserve(n_all);
  for (std::size_t c = 0; c < n_all; ++c) {
    Estimate e = reduce_payoffs({payoffs.data() + c * spec.paths, spec.paths});
    e.max_moment = max_moment;
    estimates.push_back(e);
  }
  return estimates;
}

Estimate estimate_stopped_value(const DiffusionModel& model, const ControlPolicy& control,
                                const StopPolicy& stop, const SimSpec& spec) {
  return evaluate_policies(model, control, {&stop, 1}, {}, spec)[0];
}

Estimate estimate_randomized_value(const DiffusionModel& model, const ControlPolicy& control,
                                   const IntensityPolicy& intensity, const SimSpec& spec) {
  return evaluate_policies(model, control, {}, {&intensity, 1}, spec)[0];
}

ValueSearchResult value_search(const DiffusionModel& model, const PolicyFamilies& families,
                               const SimSpec& spec) {
  if (families.controls.empty()) {
    throw std::invalid_argument("value_search: no control candidates");
  }
  if (families.stops.empty() || families.intensities.empty()) {
    throw std::invalid_argument("value_search: need stop and intensity candidates");
  }
  if (families.caps.empty()) throw std::invalid_argument("value_search: empty cap sweep");

  ValueSearchResult result;
  for (const auto& control : families.controls) {
    const auto estimates =
        evaluate_policies(model, control, families.stops, families.intensities, spec);
    for (std::size_t i = 0; i < families.stops.size(); ++i) {
      result.evaluations.push_back(
          {control.name, families.stops[i].name, 0.0, false, estimates[i]});
    }
    for (std::size_t j = 0; j < families.intensities.size(); ++j) {
      result.evaluations.push_back({control.name, families.intensities[j].name,
                                    families.intensities[j].cap, true,
                                    estimates[families.stops.size() + j]});
    }
  }

  const PolicyEvaluation* best_stop = nullptr;
  for (const auto& eval : result.evaluations) {
    if (eval.randomized) continue;
    if (!best_stop || eval.estimate.mean > best_stop->estimate.mean) best_stop = &eval;
  }

  for (double cap : families.caps) {
    const PolicyEvaluation* best_rand = nullptr;
    for (const auto& eval : result.evaluations) {
      if (!eval.randomized || eval.cap > cap) continue;
      if (!best_rand || eval.estimate.mean > best_rand->estimate.mean) best_rand = &eval;
    }
    if (!best_rand) {
      throw std::invalid_argument("value_search: no intensity candidate under cap " +
                                  std::to_string(cap));
    }
    CapRow row;
    row.cap = cap;
    row.best_randomized = *best_rand;
    row.best_stopped = *best_stop;
    row.gap = best_rand->estimate.mean - best_stop->estimate.mean;
    row.combined_se =
        std::hypot(best_rand->estimate.std_error, best_stop->estimate.std_error);
    result.rows.push_back(row);
  }
  return result;
}

PathFunctionalRoutes randomized_functional_routes(std::span<const double> discounted_running,
                                                  std::span<const double> discounted_terminal,
                                                  std::span<const double> rates, double dt) {
  const std::size_t steps = rates.size();
  if (discounted_running.size() != steps || discounted_terminal.size() != steps + 1) {
    throw std::invalid_argument("randomized_functional_routes: inconsistent sample sizes");
  }
  PathFunctionalRoutes out;
  double hazard = 0.0;    // R_k
  double running = 0.0;   // integral of f e^{-phi} up to t_k
  for (std::size_t k = 0; k < steps; ++k) {
    const double survival = std::exp(-hazard);
    const double r = rates[k];
    const double cell_mass = survival * -std::expm1(-r * dt);
    // integral of e^{-R} over the cell, and of u r e^{-R} (the ramp picked up
    // by the running payoff inside the cell).
    const double cell_survival_time = r > 0.0 ? survival * -std::expm1(-r * dt) / r
                                              : survival * dt;
    const double ramp = r > 0.0
                            ? survival * (1.0 - std::exp(-r * dt) * (1.0 + r * dt)) / r
                            : 0.0;

    out.direct += discounted_running[k] * cell_survival_time +
                  discounted_terminal[k] * cell_mass;
    out.by_parts += (running + discounted_terminal[k]) * cell_mass +
                    discounted_running[k] * ramp;

    running += discounted_running[k] * dt;
    hazard += r * dt;
  }
  const double survival_end = std::exp(-hazard);
  out.direct += discounted_terminal[steps] * survival_end;
  out.by_parts += (running + discounted_terminal[steps]) * survival_end;
  return out;
}

GrowthCheckReport spot_check_growth(const DiffusionModel& model, int truncation_index,
                                    std::uint64_t seed, int probes) {
  GrowthCheckReport report;
  RandomStream rng(seed, /*stream=*/0x67726F77u);
  const double k_n = model.truncation_bound ? model.truncation_bound(truncation_index) : 1.0;
  const double m_n =
      model.truncation_exponent ? model.truncation_exponent(truncation_index) : 0.0;
  const double slack = 1e-9;

  std::vector<double> x(static_cast<std::size_t>(model.dim));
  std::vector<double> y(static_cast<std::size_t>(model.dim));
  std::vector<double> sig(static_cast<std::size_t>(model.dim * model.noise_dim));
  std::vector<double> mu(static_cast<std::size_t>(model.dim));

  const auto coeff_norms = [&](double alpha, double t, std::span<const double> state) {
    model.sigma(alpha, t, state, sig);
    model.drift(alpha, t, state, mu);
    return euclidean_norm(sig) + euclidean_norm(mu);
  };

  for (int probe = 0; probe < probes; ++probe) {
    const double t = rng.uniform(0.0, model.horizon);
    for (auto& v : x) v = rng.uniform(-10.0, 10.0);
    for (auto& v : y) v = rng.uniform(-10.0, 10.0);
    const double alpha = model.control_sample ? model.control_sample(truncation_index,
                                                                     rng.uniform())
                                              : 0.0;
    if (model.control_in_truncation && !model.control_in_truncation(alpha, truncation_index)) {
      report.violations.push_back("control sample left its truncation set");
      continue;
    }

    const double nx = euclidean_norm(x);
    if (coeff_norms(alpha, t, x) > k_n * (1.0 + nx) + slack) {
      report.violations.push_back("coefficient growth bound failed at probe " +
                                  std::to_string(probe));
    }
    model.sigma(alpha, t, x, sig);
    model.drift(alpha, t, x, mu);
    std::vector<double> sig_x = sig;
    std::vector<double> mu_x = mu;
    model.sigma(alpha, t, y, sig);
    model.drift(alpha, t, y, mu);
    double diff = 0.0;
    for (std::size_t i = 0; i < sig.size(); ++i) diff += (sig[i] - sig_x[i]) * (sig[i] - sig_x[i]);
    double diff_mu = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) diff_mu += (mu[i] - mu_x[i]) * (mu[i] - mu_x[i]);
    std::vector<double> xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xy[i] = x[i] - y[i];
    const double dist = euclidean_norm(xy);
    if (dist > 1e-12 &&
        std::sqrt(diff) + std::sqrt(diff_mu) > k_n * dist + slack) {
      report.violations.push_back("Lipschitz bound failed at probe " + std::to_string(probe));
    }

    const double cf = std::abs(model.discount_rate(alpha, t, x)) +
                      std::abs(model.running_payoff(alpha, t, x));
    if (cf > k_n * std::pow(1.0 + nx, m_n) + slack) {
      report.violations.push_back("cost growth bound failed at probe " +
                                  std::to_string(probe));
    }
    if (std::abs(model.terminal_payoff(t, x)) >
        model.growth_bound * std::pow(1.0 + nx, model.growth_exponent) + slack) {
      report.violations.push_back("terminal payoff growth bound failed at probe " +
                                  std::to_string(probe));
    }
  }
  report.passed = report.violations.empty();
  return report;
}

double brownian_lattice_snell(double x0, double start_time, double horizon, int steps,
                              const std::function<double(double t, double x)>& payoff) {
  if (steps < 1) throw std::invalid_argument("brownian_lattice_snell: steps must be >= 1");
  const double dt = (horizon - start_time) / steps;
  const double dx = std::sqrt(dt);

  // Values at the terminal layer; node j at layer k sits at x0 + (2j - k) dx.
  std::vector<double> values(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) {
    values[static_cast<std::size_t>(j)] = payoff(horizon, x0 + (2.0 * j - steps) * dx);
  }
  for (int k = steps - 1; k >= 0; --k) {
    const double t = start_time + dt * k;
    for (int j = 0; j <= k; ++j) {
      const double cont = 0.5 * (values[static_cast<std::size_t>(j)] +
                                 values[static_cast<std::size_t>(j) + 1]);
      values[static_cast<std::size_t>(j)] =
          std::max(payoff(t, x0 + (2.0 * j - k) * dx), cont);
    }
  }
  return values[0];
}

double gbm_lattice_snell(double spot, double sigma, double rate, double start_time,
                         double horizon, int steps,
                         const std::function<double(double t, double x)>& payoff) {
  if (steps < 1) throw std::invalid_argument("gbm_lattice_snell: steps must be >= 1");
  if (!(spot > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument("gbm_lattice_snell: spot and sigma must be positive");
  }
  const double dt = (horizon - start_time) / steps;
  const double up = std::exp(sigma * std::sqrt(dt));
  const double down = 1.0 / up;
  const double grow = std::exp(rate * dt);
  const double p_up = (grow - down) / (up - down);
  if (!(p_up > 0.0) || !(p_up < 1.0)) {
    throw std::invalid_argument("gbm_lattice_snell: grid too coarse for these parameters");
  }
  const double discount = std::exp(-rate * dt);

  std::vector<double> values(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) {
    values[static_cast<std::size_t>(j)] =
        payoff(horizon, spot * std::pow(up, 2.0 * j - steps));
  }
  for (int k = steps - 1; k >= 0; --k) {
    const double t = start_time + dt * k;
    for (int j = 0; j <= k; ++j) {
      const double cont = discount * (p_up * values[static_cast<std::size_t>(j) + 1] +
                                      (1.0 - p_up) * values[static_cast<std::size_t>(j)]);
      values[static_cast<std::size_t>(j)] =
          std::max(payoff(t, spot * std::pow(up, 2.0 * j - k)), cont);
    }
  }
  return values[0];
}

}  // namespace rstop
