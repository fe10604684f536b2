#include "rstop/model_registry.hpp"

#include <cmath>
#include <stdexcept>

namespace rstop {

namespace {

using nlohmann::json;

double param(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params.at(key).is_number()) {
    throw std::invalid_argument(std::string("model parameter '") + key + "' must be a number");
  }
  return params.at(key).get<double>();
}

void set_scalar_coeffs(DiffusionModel& model, double sigma_const, double drift_const) {
  model.sigma = [sigma_const](double, double, std::span<const double>, std::span<double> out) {
    out[0] = sigma_const;
  };
  model.drift = [drift_const](double, double, std::span<const double>, std::span<double> out) {
    out[0] = drift_const;
  };
  model.discount_rate = [](double, double, std::span<const double>) { return 0.0; };
  model.running_payoff = [](double, double, std::span<const double>) { return 0.0; };
}

void set_passive_control(DiffusionModel& model) {
  model.control_in_truncation = [](double alpha, int) { return alpha == 0.0; };
  model.control_sample = [](int, double) { return 0.0; };
}

DiffusionModel make_bm_quadratic(const json& params) {
  DiffusionModel model;
  model.name = "bm-quadratic";
  model.horizon = param(params, "horizon", 1.0);
  set_scalar_coeffs(model, 1.0, 0.0);
  model.terminal_payoff = [](double, std::span<const double> x) { return x[0] * x[0]; };
  model.growth_bound = 1.0;
  model.growth_exponent = 2.0;
  model.truncation_bound = [](int) { return 1.0; };
  model.truncation_exponent = [](int) { return 0.0; };
  set_passive_control(model);
  const double horizon = model.horizon;
  model.snell_oracle = [horizon](int steps, double s, std::span<const double> x) {
    return brownian_lattice_snell(x[0], s, horizon, steps,
                                  [](double, double y) { return y * y; });
  };
  return model;
}

DiffusionModel make_bm_linear(const json& params) {
  DiffusionModel model;
  model.name = "bm-linear";
  model.horizon = param(params, "horizon", 1.0);
  set_scalar_coeffs(model, 1.0, 0.0);
  model.terminal_payoff = [](double, std::span<const double> x) { return x[0]; };
  model.growth_bound = 1.0;
  model.growth_exponent = 1.0;
  model.truncation_bound = [](int) { return 1.0; };
  model.truncation_exponent = [](int) { return 0.0; };
  set_passive_control(model);
  const double horizon = model.horizon;
  model.snell_oracle = [horizon](int steps, double s, std::span<const double> x) {
    return brownian_lattice_snell(x[0], s, horizon, steps,
                                  [](double, double y) { return y; });
  };
  return model;
}

DiffusionModel make_gbm_put(const json& params) {
  const double sigma = param(params, "sigma", 0.4);
  const double rate = param(params, "rate", 0.06);
  const double strike = param(params, "strike", 1.0);
  if (!(sigma > 0.0)) throw std::invalid_argument("gbm-put: sigma must be positive");
  if (!(rate >= 0.0)) throw std::invalid_argument("gbm-put: rate must be nonnegative");
  if (!(strike > 0.0)) throw std::invalid_argument("gbm-put: strike must be positive");

  DiffusionModel model;
  model.name = "gbm-put";
  model.horizon = param(params, "horizon", 1.0);
  model.sigma = [sigma](double, double, std::span<const double> x, std::span<double> out) {
    out[0] = sigma * x[0];
  };
  model.drift = [rate](double, double, std::span<const double> x, std::span<double> out) {
    out[0] = rate * x[0];
  };
  model.discount_rate = [rate](double, double, std::span<const double>) { return rate; };
  model.running_payoff = [](double, double, std::span<const double>) { return 0.0; };
  model.terminal_payoff = [strike](double, std::span<const double> x) {
    return std::max(strike - x[0], 0.0);
  };
  model.growth_bound = std::max(strike, 1.0);
  model.growth_exponent = 1.0;
  model.truncation_bound = [sigma, rate](int) { return sigma + rate; };
  model.truncation_exponent = [](int) { return 0.0; };
  set_passive_control(model);
  const double horizon = model.horizon;
  model.snell_oracle = [sigma, rate, strike, horizon](int steps, double s,
                                                      std::span<const double> x) {
    return gbm_lattice_snell(x[0], sigma, rate, s, horizon, steps,
                             [strike](double, double y) { return std::max(strike - y, 0.0); });
  };
  return model;
}

DiffusionModel make_controlled_drift(const json& params) {
  DiffusionModel model;
  model.name = "controlled-drift-1d";
  model.horizon = param(params, "horizon", 1.0);
  model.sigma = [](double, double, std::span<const double>, std::span<double> out) {
    out[0] = 1.0;
  };
  model.drift = [](double alpha, double, std::span<const double>, std::span<double> out) {
    out[0] = alpha;
  };
  model.discount_rate = [](double, double, std::span<const double>) { return 0.0; };
  model.running_payoff = [](double, double, std::span<const double>) { return 0.0; };
  model.terminal_payoff = [](double, std::span<const double> x) { return x[0]; };
  model.growth_bound = 1.0;
  model.growth_exponent = 1.0;
  model.truncation_bound = [](int n) { return 1.0 + n; };
  model.truncation_exponent = [](int) { return 0.0; };
  model.control_in_truncation = [](double alpha, int n) { return std::abs(alpha) <= n; };
  model.control_sample = [](int n, double u) { return (2.0 * u - 1.0) * n; };
  // No finite stopping oracle: the value grows without bound in the
  // truncation index.
  return model;
}

DiffusionModel make_deterministic_drift(const json& params) {
  const double drift = param(params, "drift", 1.0);
  DiffusionModel model;
  model.name = "deterministic-drift";
  model.horizon = param(params, "horizon", 1.0);
  set_scalar_coeffs(model, 0.0, drift);
  model.terminal_payoff = [](double, std::span<const double> x) { return x[0]; };
  model.growth_bound = 1.0;
  model.growth_exponent = 1.0;
  model.truncation_bound = [drift](int) { return std::abs(drift); };
  model.truncation_exponent = [](int) { return 0.0; };
  set_passive_control(model);
  return model;
}

}  // namespace

std::vector<ModelInfo> model_registry() {
  return {
      {"bm-quadratic", "unit Brownian motion, terminal payoff x^2 (lattice oracle)"},
      {"bm-linear", "unit Brownian motion, terminal payoff x (lattice oracle)"},
      {"gbm-put", "geometric Brownian motion, discounted put payoff (lattice oracle)"},
      {"controlled-drift-1d", "unit diffusion with drift control in [-n, n], payoff x"},
      {"deterministic-drift", "noise-free constant drift, payoff x"},
  };
}

DiffusionModel make_model(const std::string& name, const nlohmann::json& params) {
  if (!params.is_object() && !params.is_null()) {
    throw std::invalid_argument("model parameters must be an object");
  }
  const json p = params.is_null() ? json::object() : params;
  if (name == "bm-quadratic") return make_bm_quadratic(p);
  if (name == "bm-linear") return make_bm_linear(p);
  if (name == "gbm-put") return make_gbm_put(p);
  if (name == "controlled-drift-1d") return make_controlled_drift(p);
  if (name == "deterministic-drift") return make_deterministic_drift(p);
  throw std::invalid_argument("unknown model '" + name + "'; see list-models");
}

PolicyFamilies threshold_families(std::vector<double> caps, std::vector<double> thresholds,
                                  bool region_below) {
  PolicyFamilies families;
  families.caps = std::move(caps);

  ControlPolicy passive;
  passive.name = "passive";
  passive.truncation_index = 1;
  passive.value = [](double, std::span<const double>) { return 0.0; };
  families.controls.push_back(std::move(passive));

  const auto region_name = [region_below](double b) {
    return region_below ? "x<=" + std::to_string(b) : "|x|>=" + std::to_string(b);
  };
  const auto make_region = [region_below](double b) {
    return [region_below, b](double, std::span<const double> x) {
      return region_below ? x[0] <= b : std::abs(x[0]) >= b;
    };
  };

  families.stops.push_back({"never", [](double, std::span<const double>) { return false; }});
  for (double b : thresholds) {
    families.stops.push_back({"stop[" + region_name(b) + "]", make_region(b)});
  }

  families.intensities.push_back(
      {"wait", 0.0, [](double, std::span<const double>) { return 0.0; }});
  for (double cap : families.caps) {
    for (double b : thresholds) {
      IntensityPolicy policy;
      policy.name = "bang[" + region_name(b) + "]@" + std::to_string(cap);
      policy.cap = cap;
      auto region = make_region(b);
      policy.rate = [region, cap](double t, std::span<const double> x) {
        return region(t, x) ? cap : 0.0;
      };
      families.intensities.push_back(std::move(policy));
    }
  }
  return families;
}

}  // namespace rstop
