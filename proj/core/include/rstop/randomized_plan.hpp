#pragma once

#include "rstop/filtered_tree.hpp"

namespace rstop {

/// Randomized stopping on a filtered tree: a conditional stopping probability
/// p(v) in [0, 1] per node, with p = 1 forced at the leaves so the stopping
/// distribution places total mass 1 on every root-to-leaf path. The induced
/// path increment at v is p(v) times the product of (1 - p) over the proper
/// ancestors of v.
class RandomizedPlan {
 public:
  RandomizedPlan() = default;

  /// All conditional probabilities zero except the leaves, which are 1: the
  /// plan that waits until the terminal time.
  explicit RandomizedPlan(const FilteredTree& tree);

  /// Validates range and the leaf convention.
  RandomizedPlan(const FilteredTree& tree, std::vector<double> stop_probs);

  double stop_prob(NodeId v) const { return p_[static_cast<std::size_t>(v)]; }

  /// Sets p(v). Throws on leaves (their mass is pinned to 1) and on values
  /// outside [0, 1].
  void set_stop_prob(const FilteredTree& tree, NodeId v, double p);

  std::size_t size() const { return p_.size(); }

  /// The degenerate plan of a pure stopping rule: p = 1 exactly on stop
  /// nodes, 0 elsewhere. Its value reproduces evaluate_stopped exactly.
  static RandomizedPlan from_rule(const FilteredTree& tree, const StoppingRule& rule);

 private:
  std::vector<double> p_;
};

/// Stopping-mass increment per node (nonnegative; sums to 1 along every
/// root-to-leaf path).
AdaptedProcess path_increments(const FilteredTree& tree, const RandomizedPlan& plan);

/// Expected randomized-stopping payoff: sum over nodes of path probability
/// times increment times h.
double plan_value(const FilteredTree& tree, const AdaptedProcess& h, const RandomizedPlan& plan);

}  // namespace rstop
