#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rstop/cdf_path.hpp"
#include "rstop/filtered_tree.hpp"
#include "rstop/randomized_plan.hpp"

namespace rstop {

/// An experiment description: a JSON document with named sections. The kind
/// selects the procedure; every numeric control is explicit (no wall-clock
/// seeding, no hidden defaults in the output).
///
/// Recognized kinds: tree-equality, derandomize, exp-approx, time-change,
/// diffusion-compare, convergence.
struct ExperimentConfig {
  nlohmann::json raw;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json(nlohmann::json document);
};

struct ValidationReport {
  std::vector<std::string> violations;  // "field.path: what is wrong"
  bool ok() const { return violations.empty(); }
};

/// Full structural validation without execution.
ValidationReport validate(const ExperimentConfig& config);

/// One CSV row. Unset numeric fields serialize as empty cells. The pass flag
/// is recomputable from the row's own gap/se fields plus the config's
/// tolerance section (see README for the per-kind rule).
struct ResultRow {
  std::string kind;
  std::optional<double> param_n;
  std::optional<double> param_delta;
  std::optional<double> grid;
  std::optional<double> paths;
  std::optional<double> value;
  std::optional<double> se;
  std::optional<double> oracle;
  std::optional<double> gap;
  bool pass = false;
  std::uint64_t seed = 0;
  std::string version;
};

/// Header: kind,param_n,param_delta,grid,paths,value,se,oracle,gap,pass,seed,version
std::string to_csv(const std::vector<ResultRow>& rows);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::ostream* trace = nullptr;  // per-stage de-randomization diagnostics
};

struct RunOutcome {
  std::vector<ResultRow> rows;
  bool all_pass = false;
  std::string csv;
  std::string csv_path;  // empty when no output file was requested
};

/// Executes the experiment. Identical (config, seed) produce byte-identical
/// CSV, independent of the worker count. Throws std::invalid_argument with
/// the validation report when the config does not validate.
RunOutcome run(const ExperimentConfig& config, const RunOverrides& overrides = {});

/// A tree ingested from the config format: rows (id, parent id, branch
/// probability, payoff), parents listed before children, parent -1 (or null)
/// for the root.
struct LoadedTree {
  FilteredTree tree;
  AdaptedProcess payoff;
  std::vector<std::int64_t> external_ids;  // indexed by NodeId
  std::unordered_map<std::int64_t, NodeId> id_to_node;
};

LoadedTree load_tree_section(const nlohmann::json& nodes);

/// Plans serialize as stop probabilities keyed by external node id.
nlohmann::json plan_to_json(const LoadedTree& loaded, const RandomizedPlan& plan);
RandomizedPlan plan_from_json(const LoadedTree& loaded, const nlohmann::json& serialized);

/// Intensity paths serialize as {"times": [...], "rates": [...], "cap": n}.
nlohmann::json intensity_to_json(const IntensityPath& intensity);
IntensityPath intensity_from_json(const nlohmann::json& serialized);

}  // namespace rstop
