#pragma once

#include <vector>

#include "rstop/cdf_path.hpp"
#include "rstop/filtered_tree.hpp"
#include "rstop/piecewise_path.hpp"
#include "rstop/randomized_plan.hpp"

namespace rstop {

/// A staged payoff/weight system on a filtered tree. Stage i lives on the
/// depth stage_depths[i] cross-section: its payoff and weight are read at the
/// stage-depth ancestor, which makes adaptedness structural. Weights are
/// nonnegative and, summed along any root-to-leaf chain of stage atoms, equal
/// 1 within 1e-12.
class StagePayoffs {
 public:
  StagePayoffs(const FilteredTree& tree, std::vector<int> stage_depths,
               std::vector<AdaptedProcess> payoffs, std::vector<AdaptedProcess> weights);

  const FilteredTree& tree() const { return *tree_; }
  std::size_t stage_count() const { return depths_.size(); }
  int stage_depth(std::size_t i) const { return depths_[i]; }
  double payoff(std::size_t i, NodeId atom) const { return payoffs_[i][atom]; }
  double weight(std::size_t i, NodeId atom) const { return weights_[i][atom]; }

  /// Expected weighted payoff conditional on a first-stage atom.
  double weighted_value(NodeId first_stage_atom) const;

 private:
  const FilteredTree* tree_;
  std::vector<int> depths_;
  std::vector<AdaptedProcess> payoffs_;
  std::vector<AdaptedProcess> weights_;
};

/// A measurable partition of the outcome space into per-stage events: entry i
/// lists the depth-stage_depths[i] atoms assigned to stage i. Entries are
/// pairwise disjoint as events and jointly cover every root-to-leaf path.
struct StagePartition {
  std::vector<std::vector<NodeId>> stage_atoms;
};

bool is_valid_partition(const StagePayoffs& stages, const StagePartition& partition);

/// Per-atom record of the stop-or-continue comparison, for the CLI trace
/// mode.
struct PartitionTraceEntry {
  std::size_t stage = 0;
  NodeId atom = 0;
  double payoff_here = 0.0;
  double continuation = 0.0;  // conditional value of the remaining stages
  bool assigned_here = false;
  bool forced = false;  // no weight left on later stages
};

/// Replaces adapted weights by an adapted partition that weakly improves the
/// conditional payoff on every first-stage atom: walking the stages forward,
/// an atom is assigned to the current stage when its payoff is at least the
/// conditional weighted value of the remaining stages (ties stop), or when
/// the remaining weight vanishes; otherwise the remaining weights are
/// renormalized and the atom's children are deferred to the next stage.
StagePartition derandomize_partition(const StagePayoffs& stages,
                                     std::vector<PartitionTraceEntry>* trace = nullptr);

/// Conditional values of the weighted system and of a stopped system, per
/// first-stage atom. first = E[sum_i h_i p_i | atom], second = E[sum_i h_i
/// 1{A_i} | atom].
std::vector<std::pair<double, double>> partition_improvement(const StagePayoffs& stages,
                                                             const StagePartition& partition);

/// Extracts a pure stopping rule at least as good as the plan: stages are the
/// tree depths, weights are the plan's path increments, and the partition's
/// stage-i atoms become the stop set at depth i.
StoppingRule plan_to_rule(const FilteredTree& tree, const AdaptedProcess& h,
                          const RandomizedPlan& plan,
                          std::vector<PartitionTraceEntry>* trace = nullptr);

/// Left-open/right-closed piecewise-constant approximation of h on the
/// dyadic grid with 2^level cells joined with F's jump times, each cell
/// taking h at its right endpoint. `discrepancy` is the integral of
/// |h - step| against dF.
struct PiecewiseDiscretization {
  PayoffPath step;
  double discrepancy = 0.0;
};

PiecewiseDiscretization piecewise_discretize(const PayoffPath& h, const CdfPath& cdf,
                                             int level);

}  // namespace rstop
