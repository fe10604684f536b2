#include "rstop/randomized_plan.hpp"

#include <stdexcept>

namespace rstop {

RandomizedPlan::RandomizedPlan(const FilteredTree& tree) : p_(tree.node_count(), 0.0) {
  for (NodeId leaf : tree.leaves()) p_[static_cast<std::size_t>(leaf)] = 1.0;
}

RandomizedPlan::RandomizedPlan(const FilteredTree& tree, std::vector<double> stop_probs)
    : p_(std::move(stop_probs)) {
  if (p_.size() != tree.node_count()) {
    throw std::invalid_argument("RandomizedPlan: one probability per node required");
  }
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) {
      throw std::invalid_argument("RandomizedPlan: probability outside [0, 1]");
    }
    if (tree.is_leaf(static_cast<NodeId>(i)) && p_[i] != 1.0) {
      throw std::invalid_argument("RandomizedPlan: leaves must carry probability 1");
    }
  }
}

void RandomizedPlan::set_stop_prob(const FilteredTree& tree, NodeId v, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("RandomizedPlan: probability outside [0, 1]");
  }
  if (tree.is_leaf(v)) {
    throw std::invalid_argument("RandomizedPlan: leaf probabilities are pinned to 1");
  }
  p_[static_cast<std::size_t>(v)] = p;
}

RandomizedPlan RandomizedPlan::from_rule(const FilteredTree& tree, const StoppingRule& rule) {
  if (!is_valid_rule(tree, rule)) {
    throw std::invalid_argument("RandomizedPlan::from_rule: invalid rule");
  }
  RandomizedPlan plan(tree);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto v = static_cast<NodeId>(i);
    if (!tree.is_leaf(v)) plan.p_[i] = rule.stops_at(v) ? 1.0 : 0.0;
  }
  return plan;
}

AdaptedProcess path_increments(const FilteredTree& tree, const RandomizedPlan& plan) {
  if (plan.size() != tree.node_count()) {
    throw std::invalid_argument("path_increments: plan not defined on this tree");
  }
  AdaptedProcess inc(tree);
  // reach(v) = prod over proper ancestors of (1 - p); computed top-down.
  std::vector<double> reach(tree.node_count(), 1.0);
  for (int t = 0; t <= tree.depth(); ++t) {
    for (NodeId v : tree.at_depth(t)) {
      const double p = plan.stop_prob(v);
      inc[v] = p * reach[static_cast<std::size_t>(v)];
      const double carried = reach[static_cast<std::size_t>(v)] * (1.0 - p);
      for (NodeId c : tree.node(v).children) reach[static_cast<std::size_t>(c)] = carried;
    }
  }
  return inc;
}

double plan_value(const FilteredTree& tree, const AdaptedProcess& h,
                  const RandomizedPlan& plan) {
  if (h.size() != tree.node_count()) {
    throw std::invalid_argument("plan_value: process not defined on this tree");
  }
  const AdaptedProcess inc = path_increments(tree, plan);
  double value = 0.0;
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto v = static_cast<NodeId>(i);
    value += tree.path_probability(v) * inc[v] * h[v];
  }
  return value;
}

}  // namespace rstop
