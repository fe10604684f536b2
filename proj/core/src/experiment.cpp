#include "rstop/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "rstop/counter_rng.hpp"
#include "rstop/derandomize.hpp"
#include "rstop/diffusion.hpp"
#include "rstop/generators.hpp"
#include "rstop/model_registry.hpp"
#include "rstop/version.hpp"

namespace rstop {

namespace {

using nlohmann::json;

const std::vector<std::string> kKinds = {"tree-equality", "derandomize",       "exp-approx",
                                         "time-change",   "diffusion-compare", "convergence"};

bool is_tree_kind(const std::string& kind) {
  return kind == "tree-equality" || kind == "derandomize";
}
bool is_diffusion_kind(const std::string& kind) {
  return kind == "diffusion-compare" || kind == "convergence";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// -------- config access helpers (throwing; validate() reports instead) -----

double require_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(path + key + ": number required");
  }
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw std::invalid_argument(std::string(key) + ": number required");
  }
  return j.at(key).get<double>();
}

std::vector<double> number_list_or(const json& j, const char* key,
                                   std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.empty()) {
    throw std::invalid_argument(std::string(key) + ": non-empty array required");
  }
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw std::invalid_argument(std::string(key) + ": numbers required");
    out.push_back(v.get<double>());
  }
  return out;
}

struct CommonControls {
  std::string kind;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
};

CommonControls parse_common(const json& j, const RunOverrides& overrides) {
  CommonControls c;
  c.kind = j.at("kind").get<std::string>();
  c.seed = overrides.seed ? *overrides.seed : j.at("seed").get<std::uint64_t>();
  c.workers = overrides.workers
                  ? *overrides.workers
                  : static_cast<int>(number_or(j, "workers", 1.0));
  if (overrides.out) {
    c.out = *overrides.out;
  } else if (j.contains("out")) {
    c.out = j.at("out").get<std::string>();
  }
  return c;
}

// ----------------------------- validation ---------------------------------

void check_positive(const json& j, const char* key, double fallback,
                    std::vector<std::string>& violations) {
  try {
    const double v = number_or(j, key, fallback);
    if (!(v > 0.0)) violations.push_back(std::string(key) + ": must be positive");
  } catch (const std::exception& e) {
    violations.push_back(e.what());
  }
}

void validate_tree_substrate(const json& j, std::vector<std::string>& violations) {
  const bool has_tree = j.contains("tree");
  const bool has_corpus = j.contains("corpus");
  if (has_tree == has_corpus) {
    violations.push_back("substrate: exactly one of 'tree' or 'corpus' required");
    return;
  }
  if (has_tree) {
    try {
      if (!j.at("tree").is_object() || !j.at("tree").contains("nodes")) {
        violations.push_back("tree.nodes: required");
      } else {
        load_tree_section(j.at("tree").at("nodes"));
      }
    } catch (const std::exception& e) {
      violations.push_back(std::string("tree.nodes: ") + e.what());
    }
  } else {
    const auto& corpus = j.at("corpus");
    if (!corpus.is_object()) {
      violations.push_back("corpus: object required");
      return;
    }
    for (const char* key : {"count", "max_depth", "max_branching"}) {
      if (!corpus.contains(key) || !corpus.at(key).is_number() ||
          !(corpus.at(key).get<double>() >= 1.0)) {
        violations.push_back(std::string("corpus.") + key + ": must be >= 1");
      }
    }
  }
}

void validate_model_section(const json& j, std::vector<std::string>& violations) {
  if (!j.contains("model") || !j.at("model").is_object() ||
      !j.at("model").contains("name")) {
    violations.push_back("model.name: required");
    return;
  }
  try {
    make_model(j.at("model").at("name").get<std::string>(),
               j.at("model").value("params", json::object()));
  } catch (const std::exception& e) {
    violations.push_back(std::string("model: ") + e.what());
  }
  if (j.contains("start_state") &&
      (!j.at("start_state").is_array() || j.at("start_state").empty())) {
    violations.push_back("start_state: non-empty array required");
  }
}

// ------------------------------ CSV ----------------------------------------

void append_row(std::string& out, const ResultRow& row) {
  out += row.kind;
  out += ',';
  out += format_cell(row.param_n);
  out += ',';
  out += format_cell(row.param_delta);
  out += ',';
  out += format_cell(row.grid);
  out += ',';
  out += format_cell(row.paths);
  out += ',';
  out += format_cell(row.value);
  out += ',';
  out += format_cell(row.se);
  out += ',';
  out += format_cell(row.oracle);
  out += ',';
  out += format_cell(row.gap);
  out += ',';
  out += row.pass ? '1' : '0';
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += row.version;
  out += '\n';
}

// --------------------------- tree substrates -------------------------------

struct Substrate {
  FilteredTree tree;
  AdaptedProcess payoff;
};

std::vector<Substrate> load_substrates(const json& j, std::uint64_t seed) {
  std::vector<Substrate> out;
  if (j.contains("tree")) {
    LoadedTree loaded = load_tree_section(j.at("tree").at("nodes"));
    out.push_back({std::move(loaded.tree), std::move(loaded.payoff)});
    return out;
  }
  const auto& corpus = j.at("corpus");
  const int count = static_cast<int>(require_number(corpus, "corpus.", "count"));
  RandomTreeOptions options;
  options.max_depth = static_cast<int>(require_number(corpus, "corpus.", "max_depth"));
  options.max_branching = static_cast<int>(require_number(corpus, "corpus.", "max_branching"));
  options.max_rules = number_or(corpus, "max_rules", 1e4);
  const double lo = number_or(corpus, "payoff_low", -1.0);
  const double hi = number_or(corpus, "payoff_high", 1.0);
  for (int i = 0; i < count; ++i) {
    FilteredTree tree = random_tree(options, mix_seed(seed, 0x74726565ull, i));
    AdaptedProcess payoff = random_payoffs(tree, lo, hi, mix_seed(seed, 0x70617921ull, i));
    out.push_back({std::move(tree), std::move(payoff)});
  }
  return out;
}

// ------------------------- experiment procedures ---------------------------

std::vector<ResultRow> run_tree_equality(const json& j, const CommonControls& c) {
  const int plans = static_cast<int>(number_or(j, "plans", 1000.0));
  const double tol = number_or(j, "tolerance", 1e-12);
  const double rule_cap = number_or(j, "rule_cap", 1e6);
  const auto substrates = load_substrates(j, c.seed);

  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < substrates.size(); ++i) {
    const auto& [tree, payoff] = substrates[i];
    const AdaptedProcess envelope = snell_envelope(tree, payoff);
    const double oracle = envelope[FilteredTree::kRoot];

    double best_rule = -std::numeric_limits<double>::infinity();
    for (const auto& rule : enumerate_stopping_rules(tree, rule_cap)) {
      best_rule = std::max(best_rule, evaluate_stopped(tree, payoff, rule));
    }
    ResultRow rule_row;
    rule_row.kind = c.kind;
    rule_row.param_n = static_cast<double>(i);
    rule_row.param_delta = 0.0;  // subcase: enumerated pure rules
    rule_row.value = best_rule;
    rule_row.oracle = oracle;
    rule_row.gap = best_rule - oracle;
    rule_row.pass = std::abs(*rule_row.gap) <= tol;
    rows.push_back(rule_row);

    double best_plan = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < plans; ++p) {
      const RandomizedPlan plan = random_plan(tree, mix_seed(c.seed, i, p));
      best_plan = std::max(best_plan, plan_value(tree, payoff, plan));
    }
    ResultRow plan_row;
    plan_row.kind = c.kind;
    plan_row.param_n = static_cast<double>(i);
    plan_row.param_delta = 1.0;  // subcase: sampled randomized plans
    plan_row.value = best_plan;
    plan_row.oracle = oracle;
    plan_row.gap = best_plan - oracle;
    plan_row.pass = *plan_row.gap <= tol;  // plans may undershoot, never exceed
    rows.push_back(plan_row);
  }
  return rows;
}

std::vector<ResultRow> run_derandomize(const json& j, const CommonControls& c,
                                       std::ostream* trace) {
  const int plans = static_cast<int>(number_or(j, "plans", 1000.0));
  const double tol = number_or(j, "tolerance", 1e-12);
  const auto substrates = load_substrates(j, c.seed);

  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < substrates.size(); ++i) {
    const auto& [tree, payoff] = substrates[i];
    const double snell = snell_envelope(tree, payoff)[FilteredTree::kRoot];

    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_headroom = std::numeric_limits<double>::infinity();
    for (int p = 0; p < plans; ++p) {
      const RandomizedPlan plan = random_plan(tree, mix_seed(c.seed, i, p));
      std::vector<PartitionTraceEntry> trace_entries;
      const StoppingRule rule =
          plan_to_rule(tree, payoff, plan, trace ? &trace_entries : nullptr);
      if (!is_valid_rule(tree, rule)) {
        throw std::runtime_error("derandomize: extracted rule is invalid");
      }
      const double rule_value = evaluate_stopped(tree, payoff, rule);
      const double value = plan_value(tree, payoff, plan);
      worst_margin = std::min(worst_margin, rule_value - value);
      worst_headroom = std::min(worst_headroom, snell - rule_value);
      if (trace) {
        *trace << "tree " << i << " plan " << p << " value " << value << " -> rule value "
               << rule_value << '\n';
        for (const auto& entry : trace_entries) {
          *trace << "  stage " << entry.stage << " atom " << entry.atom << " payoff "
                 << entry.payoff_here << " continuation " << entry.continuation
                 << (entry.assigned_here ? " STOP" : " continue")
                 << (entry.forced ? " (forced)" : "") << '\n';
        }
      }
    }

    ResultRow margin_row;
    margin_row.kind = c.kind;
    margin_row.param_n = static_cast<double>(i);
    margin_row.param_delta = 0.0;  // subcase: rule value minus plan value
    margin_row.value = worst_margin;
    margin_row.oracle = 0.0;
    margin_row.gap = worst_margin;
    margin_row.pass = worst_margin >= -tol;
    rows.push_back(margin_row);

    ResultRow headroom_row;
    headroom_row.kind = c.kind;
    headroom_row.param_n = static_cast<double>(i);
    headroom_row.param_delta = 1.0;  // subcase: envelope value minus rule value
    headroom_row.value = worst_headroom;
    headroom_row.oracle = 0.0;
    headroom_row.gap = worst_headroom;
    headroom_row.pass = worst_headroom >= -tol;
    rows.push_back(headroom_row);
  }
  return rows;
}

std::vector<ResultRow> run_exp_approx(const json& j, const CommonControls& c) {
  const std::string path_name = j.value("path", std::string("exp-decay"));
  const double horizon = number_or(j, "horizon", 40.0);
  const double stop_time = number_or(j, "stop_time", 0.0);
  const double tol = number_or(j, "tolerance", 1e-9);
  const auto caps = number_list_or(j, "caps", {1.0, 10.0, 100.0, 10000.0});
  const auto windows = number_list_or(j, "windows", {0.05});

  PayoffPath h = PayoffPath::constant(0.0);
  double sup_abs = 0.0;
  double lipschitz = 0.0;
  bool has_closed_form = false;
  if (path_name == "exp-decay") {
    h = PayoffPath::smooth([](double t) { return std::exp(-t); }, horizon);
    sup_abs = 1.0;
    lipschitz = 1.0;
    has_closed_form = true;
  } else if (path_name == "sin") {
    h = PayoffPath::smooth([](double t) { return std::sin(t); }, horizon);
    sup_abs = 1.0;
    lipschitz = 1.0;
  } else {
    throw std::invalid_argument("exp-approx: unknown path '" + path_name + "'");
  }

  std::vector<ResultRow> rows;
  for (double cap : caps) {
    for (double window : windows) {
      const auto approx = exponential_approximation(stop_time, cap, h, window);
      ResultRow row;
      row.kind = c.kind;
      row.param_n = cap;
      row.param_delta = window;
      row.value = approx.value;
      if (has_closed_form) {
        row.oracle = std::exp(-stop_time) * cap / (cap + 1.0);
        row.gap = approx.value - *row.oracle;
        row.pass = std::abs(*row.gap) <= tol;
      } else {
        row.oracle = h(stop_time);
        row.gap = approx.value - *row.oracle;
        const double bound =
            2.0 * sup_abs * std::exp(-cap * window) + lipschitz * window + tol;
        row.pass = std::abs(*row.gap) <= bound;
      }
      // The decomposition must reassemble the direct integral.
      const double split = approx.stop_term + approx.local_term + approx.tail_term;
      row.pass = row.pass && std::abs(split - approx.value) <= 1e-9;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ResultRow> run_time_change(const json& j, const CommonControls& c) {
  const int cases = static_cast<int>(number_or(j, "cases", 100.0));
  const int quad_cases = static_cast<int>(number_or(j, "quad_cases", 20.0));
  const double tol = number_or(j, "tolerance", 1e-12);
  const double quad_tol = number_or(j, "quad_tolerance", 1e-8);
  const double horizon = number_or(j, "horizon", 1.0);

  std::vector<ResultRow> rows;

  // Step payoff against pure-jump distributions: both routes are exact sums.
  for (int k = 0; k < cases; ++k) {
    RandomStream rng(mix_seed(c.seed, 0x73746570ull, k), 0);
    const int jumps = 1 + static_cast<int>(rng.below(6));
    std::vector<std::pair<double, double>> jump_list;
    double mass_left = 1.0;
    for (int m = 0; m < jumps; ++m) {
      const double t = rng.uniform(0.0, horizon);
      const double mass = (m + 1 == jumps) ? mass_left : rng.uniform() * mass_left;
      jump_list.emplace_back(t, mass);
      mass_left -= mass;
    }
    const CdfPath cdf = CdfPath::from_jumps(std::move(jump_list), horizon);

    const int cells = 1 + static_cast<int>(rng.below(8));
    std::vector<double> times, values;
    for (int m = 0; m < cells; ++m) {
      times.push_back(horizon * (m + 1.0) / cells);
      values.push_back(rng.uniform(-2.0, 2.0));
    }
    const PayoffPath h = PayoffPath::step(rng.uniform(-2.0, 2.0), times, values);

    const double lhs = stieltjes_integral(h, cdf);
    const double rhs = time_change_integral(h, cdf);
    ResultRow row;
    row.kind = c.kind;
    row.param_n = static_cast<double>(k);
    row.param_delta = 0.0;  // subcase: step payoff, pure-jump distribution
    row.value = lhs;
    row.oracle = rhs;
    row.gap = lhs - rhs;
    row.pass = std::abs(*row.gap) <= tol;
    rows.push_back(row);
  }

  // Smooth payoff against hazard-induced distributions: quadrature on both
  // routes.
  for (int k = 0; k < quad_cases; ++k) {
    RandomStream rng(mix_seed(c.seed, 0x71756164ull, k), 0);
    const int cells = 1 + static_cast<int>(rng.below(4));
    std::vector<double> times = {0.0};
    for (int m = 0; m < cells; ++m) {
      times.push_back(horizon * (m + 1.0) / cells);
    }
    std::vector<double> rates;
    for (int m = 0; m < cells; ++m) rates.push_back(rng.uniform(0.0, 3.0));
    const CdfPath cdf = intensity_to_cdf(IntensityPath(times, rates, 3.0));

    const double a = rng.uniform(0.5, 3.0);
    const double b = rng.uniform(0.0, 6.0);
    const PayoffPath h =
        PayoffPath::smooth([a, b](double t) { return std::sin(a * t + b); }, horizon);

    const double lhs = stieltjes_integral(h, cdf);
    const double rhs = time_change_integral(h, cdf);
    ResultRow row;
    row.kind = c.kind;
    row.param_n = static_cast<double>(k);
    row.param_delta = 1.0;  // subcase: smooth payoff, hazard distribution
    row.value = lhs;
    row.oracle = rhs;
    row.gap = lhs - rhs;
    row.pass = std::abs(*row.gap) <= quad_tol;
    rows.push_back(row);
  }
  return rows;
}

struct DiffusionSetup {
  DiffusionModel model;
  PolicyFamilies families;
  SimSpec spec;
  int oracle_steps = 2000;
  double bias = 2e-3;
  double se_multiplier = 3.0;
  double oracle = 0.0;
  bool has_oracle = false;
};

DiffusionSetup parse_diffusion(const json& j, const CommonControls& c) {
  DiffusionSetup setup;
  setup.model = make_model(j.at("model").at("name").get<std::string>(),
                           j.at("model").value("params", json::object()));

  setup.spec.start_time = number_or(j, "start_time", 0.0);
  if (j.contains("start_state")) {
    setup.spec.start_state = j.at("start_state").get<std::vector<double>>();
  }
  setup.spec.steps = static_cast<int>(number_or(j, "grid", 512.0));
  setup.spec.paths = static_cast<std::size_t>(number_or(j, "paths", 100000.0));
  setup.spec.seed = c.seed;
  setup.spec.workers = c.workers;
  setup.spec.moment_bound = number_or(j, "moment_bound", 1e12);

  const auto caps = number_list_or(j, "caps", {64.0});
  const auto thresholds = number_list_or(j, "thresholds", {0.75, 1.25, 2.0});
  const bool region_below = j.value("region_below", false);
  setup.families = threshold_families(caps, thresholds, region_below);

  setup.oracle_steps = static_cast<int>(number_or(j, "oracle_steps", 2000.0));
  setup.bias = number_or(j, "bias", 2e-3);
  setup.se_multiplier = number_or(j, "se_multiplier", 3.0);
  if (setup.model.snell_oracle) {
    setup.oracle = setup.model.snell_oracle(setup.oracle_steps, setup.spec.start_time,
                                            setup.spec.start_state);
    setup.has_oracle = true;
  }
  return setup;
}

std::vector<ResultRow> run_diffusion_compare(const json& j, const CommonControls& c) {
  DiffusionSetup setup = parse_diffusion(j, c);
  const auto result = value_search(setup.model, setup.families, setup.spec);
  const auto& row_data = result.rows.back();  // largest cap

  std::vector<ResultRow> rows;
  const auto make_row = [&](double subcase, const Estimate& est, double oracle,
                            double se_for_gap) {
    ResultRow row;
    row.kind = c.kind;
    row.param_n = row_data.cap;
    row.param_delta = subcase;
    row.grid = static_cast<double>(setup.spec.steps);
    row.paths = static_cast<double>(setup.spec.paths);
    row.value = est.mean;
    row.se = est.std_error;
    row.oracle = oracle;
    row.gap = est.mean - oracle;
    row.pass = std::abs(*row.gap) <= setup.se_multiplier * se_for_gap + setup.bias;
    return row;
  };

  const Estimate& stopped = row_data.best_stopped.estimate;
  const Estimate& randomized = row_data.best_randomized.estimate;
  if (setup.has_oracle) {
    rows.push_back(make_row(0.0, stopped, setup.oracle, stopped.std_error));
    rows.push_back(make_row(1.0, randomized, setup.oracle, randomized.std_error));
  }
  // Randomized versus stopped under common random numbers.
  rows.push_back(make_row(2.0, randomized, stopped.mean, row_data.combined_se));
  return rows;
}

std::vector<ResultRow> run_convergence(const json& j, const CommonControls& c) {
  DiffusionSetup setup = parse_diffusion(j, c);
  const auto result = value_search(setup.model, setup.families, setup.spec);

  std::vector<ResultRow> rows;
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& cap_row = result.rows[i];
    const bool last = (i + 1 == result.rows.size());
    ResultRow row;
    row.kind = c.kind;
    row.param_n = cap_row.cap;
    row.grid = static_cast<double>(setup.spec.steps);
    row.paths = static_cast<double>(setup.spec.paths);
    row.value = cap_row.best_randomized.estimate.mean;
    row.se = cap_row.best_randomized.estimate.std_error;
    const bool monotone = *row.value >= previous;
    previous = *row.value;
    if (setup.has_oracle) {
      row.oracle = setup.oracle;
      row.gap = *row.value - setup.oracle;
      const double tol = setup.se_multiplier * *row.se + setup.bias;
      row.pass = monotone && (!last || std::abs(*row.gap) <= tol);
    } else {
      row.pass = monotone;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in '" + path + "': " + e.what());
  }
  return from_json(std::move(j));
}

ExperimentConfig ExperimentConfig::from_json(json document) {
  ExperimentConfig config;
  config.raw = std::move(document);
  return config;
}

ValidationReport validate(const ExperimentConfig& config) {
  ValidationReport report;
  const json& j = config.raw;
  if (!j.is_object()) {
    report.violations.push_back("config: top-level object required");
    return report;
  }

  std::string kind;
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    report.violations.push_back("kind: required string");
  } else {
    kind = j.at("kind").get<std::string>();
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
      report.violations.push_back("kind: unrecognized '" + kind + "'");
    }
  }

  if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
    report.violations.push_back("seed: required integer (runs never seed from the clock)");
  }
  if (j.contains("workers") &&
      (!j.at("workers").is_number_integer() || j.at("workers").get<int>() < 1)) {
    report.violations.push_back("workers: must be an integer >= 1");
  }
  if (j.contains("out") && !j.at("out").is_string()) {
    report.violations.push_back("out: string path required");
  }

  if (is_tree_kind(kind)) {
    validate_tree_substrate(j, report.violations);
    check_positive(j, "plans", 1000.0, report.violations);
    check_positive(j, "tolerance", 1e-12, report.violations);
  } else if (kind == "exp-approx") {
    check_positive(j, "horizon", 40.0, report.violations);
    check_positive(j, "tolerance", 1e-9, report.violations);
    try {
      for (double cap : number_list_or(j, "caps", {1.0})) {
        if (!(cap >= 1.0)) report.violations.push_back("caps: every cap must be >= 1");
      }
      for (double w : number_list_or(j, "windows", {0.05})) {
        if (!(w > 0.0)) report.violations.push_back("windows: must be positive");
      }
    } catch (const std::exception& e) {
      report.violations.push_back(e.what());
    }
    const std::string path_name = j.is_object() ? j.value("path", "exp-decay") : "exp-decay";
    if (path_name != "exp-decay" && path_name != "sin") {
      report.violations.push_back("path: must be 'exp-decay' or 'sin'");
    }
  } else if (kind == "time-change") {
    check_positive(j, "cases", 100.0, report.violations);
    check_positive(j, "quad_cases", 20.0, report.violations);
    check_positive(j, "tolerance", 1e-12, report.violations);
    check_positive(j, "quad_tolerance", 1e-8, report.violations);
    check_positive(j, "horizon", 1.0, report.violations);
  } else if (is_diffusion_kind(kind)) {
    validate_model_section(j, report.violations);
    check_positive(j, "grid", 512.0, report.violations);
    check_positive(j, "paths", 100000.0, report.violations);
    check_positive(j, "bias", 2e-3, report.violations);
    check_positive(j, "se_multiplier", 3.0, report.violations);
    check_positive(j, "oracle_steps", 2000.0, report.violations);
    try {
      const auto caps = number_list_or(j, "caps", {64.0});
      for (std::size_t i = 0; i < caps.size(); ++i) {
        if (!(caps[i] > 0.0)) report.violations.push_back("caps: must be positive");
        if (i > 0 && !(caps[i] > caps[i - 1])) {
          report.violations.push_back("caps: must be strictly increasing");
        }
      }
      for (double b : number_list_or(j, "thresholds", {1.0})) {
        if (!std::isfinite(b)) report.violations.push_back("thresholds: must be finite");
      }
    } catch (const std::exception& e) {
      report.violations.push_back(e.what());
    }
  }
  return report;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "kind,param_n,param_delta,grid,paths,value,se,oracle,gap,pass,seed,version\n";
  for (const auto& row : rows) append_row(out, row);
  return out;
}

RunOutcome run(const ExperimentConfig& config, const RunOverrides& overrides) {
  const ValidationReport report = validate(config);
  if (!report.ok()) {
    std::string message = "config invalid:";
    for (const auto& v : report.violations) message += "\n  " + v;
    throw std::invalid_argument(message);
  }

  const json& j = config.raw;
  const CommonControls c = parse_common(j, overrides);

  RunOutcome outcome;
  if (c.kind == "tree-equality") {
    outcome.rows = run_tree_equality(j, c);
  } else if (c.kind == "derandomize") {
    outcome.rows = run_derandomize(j, c, overrides.trace);
  } else if (c.kind == "exp-approx") {
    outcome.rows = run_exp_approx(j, c);
  } else if (c.kind == "time-change") {
    outcome.rows = run_time_change(j, c);
  } else if (c.kind == "diffusion-compare") {
    outcome.rows = run_diffusion_compare(j, c);
  } else {
    outcome.rows = run_convergence(j, c);
  }

  for (auto& row : outcome.rows) {
    row.seed = c.seed;
    row.version = kVersion;
  }
  outcome.all_pass = std::all_of(outcome.rows.begin(), outcome.rows.end(),
                                 [](const ResultRow& r) { return r.pass; });
  outcome.csv = to_csv(outcome.rows);
  if (!c.out.empty()) {
    std::ofstream file(c.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write CSV to '" + c.out + "'");
    file << outcome.csv;
    outcome.csv_path = c.out;
  }
  return outcome;
}

LoadedTree load_tree_section(const nlohmann::json& nodes) {
  if (!nodes.is_array() || nodes.empty()) {
    throw std::invalid_argument("tree nodes: non-empty array of rows required");
  }
  struct Row {
    std::int64_t id;
    std::int64_t parent;
    double prob;
    double payoff;
  };
  std::vector<Row> rows;
  for (const auto& entry : nodes) {
    if (!entry.is_array() || entry.size() != 4) {
      throw std::invalid_argument("tree node row: [id, parent, probability, payoff] required");
    }
    Row row{};
    row.id = entry.at(0).get<std::int64_t>();
    row.parent = entry.at(1).is_null() ? -1 : entry.at(1).get<std::int64_t>();
    row.prob = entry.at(2).get<double>();
    row.payoff = entry.at(3).get<double>();
    rows.push_back(row);
  }
  if (rows.front().parent != -1) {
    throw std::invalid_argument("tree nodes: first row must be the root (parent -1)");
  }

  LoadedTree loaded;
  TreeBuilder builder;
  std::vector<double> payoffs;
  loaded.external_ids.reserve(rows.size());
  payoffs.reserve(rows.size());

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    if (loaded.id_to_node.count(row.id)) {
      throw std::invalid_argument("tree nodes: duplicate id " + std::to_string(row.id));
    }
    NodeId node;
    if (i == 0) {
      node = builder.root();
    } else {
      const auto parent = loaded.id_to_node.find(row.parent);
      if (parent == loaded.id_to_node.end()) {
        throw std::invalid_argument("tree nodes: parent of " + std::to_string(row.id) +
                                    " not listed before it");
      }
      node = builder.add_child(parent->second, row.prob);
    }
    loaded.id_to_node.emplace(row.id, node);
    loaded.external_ids.push_back(row.id);
    payoffs.push_back(row.payoff);
  }
  loaded.tree = std::move(builder).build();
  loaded.payoff = AdaptedProcess(loaded.tree, std::move(payoffs));
  return loaded;
}

nlohmann::json plan_to_json(const LoadedTree& loaded, const RandomizedPlan& plan) {
  json out = json::object();
  for (std::size_t i = 0; i < loaded.external_ids.size(); ++i) {
    out[std::to_string(loaded.external_ids[i])] = plan.stop_prob(static_cast<NodeId>(i));
  }
  return out;
}

RandomizedPlan plan_from_json(const LoadedTree& loaded, const nlohmann::json& serialized) {
  if (!serialized.is_object()) {
    throw std::invalid_argument("plan: object keyed by node id required");
  }
  std::vector<double> p(loaded.tree.node_count(), 0.0);
  for (NodeId leaf : loaded.tree.leaves()) p[static_cast<std::size_t>(leaf)] = 1.0;
  for (const auto& [key, value] : serialized.items()) {
    const std::int64_t id = std::stoll(key);
    const auto it = loaded.id_to_node.find(id);
    if (it == loaded.id_to_node.end()) {
      throw std::invalid_argument("plan: unknown node id " + key);
    }
    p[static_cast<std::size_t>(it->second)] = value.get<double>();
  }
  return RandomizedPlan(loaded.tree, std::move(p));
}

nlohmann::json intensity_to_json(const IntensityPath& intensity) {
  return json{{"times", intensity.times()}, {"rates", intensity.rates()},
              {"cap", intensity.cap()}};
}

IntensityPath intensity_from_json(const nlohmann::json& serialized) {
  return IntensityPath(serialized.at("times").get<std::vector<double>>(),
                       serialized.at("rates").get<std::vector<double>>(),
                       serialized.at("cap").get<double>());
}

}  // namespace rstop
