#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rstop {

/// A controlled diffusion with running cost, discounting and terminal payoff.
/// Coefficients are closed-form callables of (control, time, state); the
/// control parameter is scalar, with membership in the truncation sets A_n
/// declared by the model. Declared growth bounds are spot-checked, not
/// proven.
struct DiffusionModel {
  std::string name;
  int dim = 1;
  int noise_dim = 1;
  double horizon = 1.0;

  /// Row-major dim x noise_dim diffusion matrix.
  std::function<void(double alpha, double t, std::span<const double> x, std::span<double> out)>
      sigma;
  std::function<void(double alpha, double t, std::span<const double> x, std::span<double> out)>
      drift;
  /// Discount rate c; the accumulated discount is e^{-integral of c}.
  std::function<double(double alpha, double t, std::span<const double> x)> discount_rate;
  /// Running payoff f.
  std::function<double(double alpha, double t, std::span<const double> x)> running_payoff;
  /// Terminal payoff g, control-free.
  std::function<double(double t, std::span<const double> x)> terminal_payoff;

  /// Growth declarations: |g| <= K (1+|x|)^m, and per truncation index n,
  /// |sigma| + |drift| <= K_n (1+|x|), Lipschitz constant K_n,
  /// |c| + |f| <= K_n (1+|x|)^{m_n}.
  double growth_bound = 1.0;     // K
  double growth_exponent = 1.0;  // m
  std::function<double(int n)> truncation_bound;     // K_n
  std::function<double(int n)> truncation_exponent;  // m_n

  /// alpha in A_n?
  std::function<bool(double alpha, int n)> control_in_truncation;
  /// Maps u in [0,1) to a point of A_n (for probing and random controls).
  std::function<double(int n, double u)> control_sample;

  /// Optional lattice oracle for the optimal-stopping value from
  /// (start_time, start_state); empty when no closed desk-scale oracle
  /// exists.
  std::function<double(int steps, double start_time, std::span<const double> start_state)>
      snell_oracle;
};

/// Markov feedback control with values in a declared truncation set.
struct ControlPolicy {
  std::string name;
  int truncation_index = 1;
  std::function<double(double t, std::span<const double> x)> value;
};

/// Feedback stopping: stop at the first grid time the path enters the
/// region, else at the horizon.
struct StopPolicy {
  std::string name;
  std::function<bool(double t, std::span<const double> x)> region;
};

/// Feedback stopping intensity with values in [0, cap].
struct IntensityPolicy {
  std::string name;
  double cap = 1.0;
  std::function<double(double t, std::span<const double> x)> rate;
};

/// Simulation request. Per-path randomness is a pure function of
/// (seed, path index), so estimates are independent of worker count and
/// scheduling.
struct SimSpec {
  double start_time = 0.0;
  std::vector<double> start_state = {0.0};
  int steps = 100;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Abort threshold for the observed moment sup_k mean (1+|x_k|)^{m_n}.
  double moment_bound = 1e12;
};

/// Monte Carlo estimate with its sampling error and the observed moment
/// guard value.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  double max_moment = 0.0;  // sup over grid of sample mean of (1+|x|)^{m_n}
};

/// Dense storage of simulated paths; intended for diagnostics and desk-scale
/// checks, not for large estimation runs (the estimators stream instead).
struct PathBundle {
  double start_time = 0.0;
  double dt = 0.0;
  int steps = 0;
  int dim = 1;
  int noise_dim = 1;
  std::size_t paths = 0;
  std::uint64_t seed = 0;

  std::vector<double> states;     // [path][step 0..steps][dim]
  std::vector<double> discounts;  // accumulated phi, [path][step 0..steps]
  std::vector<double> noise;      // Brownian increments, [path][step][noise_dim]

  std::span<const double> state(std::size_t path, int k) const;
  double discount(std::size_t path, int k) const;
  std::span<const double> increments(std::size_t path, int k) const;
  double time(int k) const { return start_time + dt * k; }
};

/// Euler-Maruyama with left-endpoint discount accumulation. Throws
/// std::runtime_error with path/step diagnostics if a state goes non-finite.
PathBundle simulate_paths(const DiffusionModel& model, const ControlPolicy& control,
                          const SimSpec& spec);

/// Expected stopped payoff: running payoff integrated to the stopping time
/// (left-endpoint rule) plus the discounted terminal payoff at the stop.
Estimate estimate_stopped_value(const DiffusionModel& model, const ControlPolicy& control,
                                const StopPolicy& stop, const SimSpec& spec);

/// Expected randomized-stopping payoff: the running and terminal payoffs
/// weighted by the survival factor e^{-integral of the intensity}, with the
/// survival factor accumulated through exact per-step exponentials and the
/// residual mass settled at the horizon.
Estimate estimate_randomized_value(const DiffusionModel& model, const ControlPolicy& control,
                                   const IntensityPolicy& intensity, const SimSpec& spec);

/// One sweep over common paths evaluating many stop and intensity policies
/// under one control. Entry i of the result corresponds to stops[i]; entry
/// stops.size() + j to intensities[j].
std::vector<Estimate> evaluate_policies(const DiffusionModel& model,
                                        const ControlPolicy& control,
                                        std::span<const StopPolicy> stops,
                                        std::span<const IntensityPolicy> intensities,
                                        const SimSpec& spec);

/// Candidate families for the double supremum over controls and stopping
/// objects. Intensities carry their own caps; `caps` lists the nested sweep
/// levels.
struct PolicyFamilies {
  std::vector<ControlPolicy> controls;
  std::vector<StopPolicy> stops;
  std::vector<IntensityPolicy> intensities;
  std::vector<double> caps;
};

struct PolicyEvaluation {
  std::string control;
  std::string policy;
  double cap = 0.0;  // 0 for stop policies
  bool randomized = false;
  Estimate estimate;
};

/// One row of the nested-cap table: the best randomized value over
/// intensities with cap <= `cap` versus the best stopped value.
struct CapRow {
  double cap = 0.0;
  PolicyEvaluation best_randomized;
  PolicyEvaluation best_stopped;
  double gap = 0.0;          // best randomized - best stopped
  double combined_se = 0.0;  // sqrt(se_r^2 + se_s^2)
};

struct ValueSearchResult {
  std::vector<PolicyEvaluation> evaluations;
  std::vector<CapRow> rows;
};

/// Evaluates every (control, policy) pair under common random numbers and
/// tabulates the nested-cap suprema. The reported best value is nondecreasing
/// in the cap by construction: rows maximize over growing candidate sets with
/// identical noise.
ValueSearchResult value_search(const DiffusionModel& model, const PolicyFamilies& families,
                               const SimSpec& spec);

/// Two algebraically equal routes to the randomized functional of one path,
/// with payoffs frozen per cell and the survival weight integrated exactly:
/// `direct` integrates (f + g r) e^{-R} plus the terminal term, `by_parts`
/// integrates (integral of f + g) against the stopping measure r e^{-R} dt
/// plus its terminal atom. Used as a per-path consistency oracle.
struct PathFunctionalRoutes {
  double direct = 0.0;
  double by_parts = 0.0;
};

/// discounted_running: f e^{-phi} per cell (size steps);
/// discounted_terminal: g e^{-phi} per grid point (size steps + 1);
/// rates: intensity per cell (size steps).
PathFunctionalRoutes randomized_functional_routes(std::span<const double> discounted_running,
                                                  std::span<const double> discounted_terminal,
                                                  std::span<const double> rates, double dt);

/// Samples probe points and controls and verifies the declared growth and
/// Lipschitz bounds; failures are reported, not thrown.
struct GrowthCheckReport {
  bool passed = true;
  std::vector<std::string> violations;
};

GrowthCheckReport spot_check_growth(const DiffusionModel& model, int truncation_index,
                                    std::uint64_t seed, int probes = 256);

/// Optimal-stopping value of g on a recombining unit-volatility random-walk
/// lattice started at (start_time, x0): the desk-scale oracle for driftless
/// unit-diffusion models.
double brownian_lattice_snell(double x0, double start_time, double horizon, int steps,
                              const std::function<double(double t, double x)>& payoff);

/// Optimal-stopping value of g under geometric Brownian motion dynamics on a
/// multiplicative lattice with per-step discount e^{-rate dt}.
double gbm_lattice_snell(double spot, double sigma, double rate, double start_time,
                         double horizon, int steps,
                         const std::function<double(double t, double x)>& payoff);

}  // namespace rstop
