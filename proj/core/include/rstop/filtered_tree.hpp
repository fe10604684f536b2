#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rstop {

using NodeId = std::int32_t;

/// A finite filtered probability space: a rooted tree whose depth-t
/// cross-section lists the atoms of the time-t sigma-algebra. Each non-root
/// node carries the conditional probability of being reached from its parent.
///
/// Invariants, enforced by TreeBuilder::build:
///   - children of every internal node carry probabilities summing to 1
///     within 1e-12, each strictly positive,
///   - every leaf sits at the common terminal depth,
///   - every internal node has at least one child.
class FilteredTree {
 public:
  struct Node {
    NodeId parent = -1;  // -1 at the root
    std::int32_t depth = 0;
    double branch_prob = 1.0;  // P(node | parent); 1 at the root
    std::vector<NodeId> children;
  };

  static constexpr NodeId kRoot = 0;

  /// Empty tree; usable only as an assignment target.
  FilteredTree() = default;

  int depth() const { return depth_; }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(NodeId v) const { return nodes_[static_cast<std::size_t>(v)]; }
  bool is_leaf(NodeId v) const { return node(v).children.empty(); }

  /// Unconditional probability of the path from the root to v. Always > 0.
  double path_probability(NodeId v) const { return path_prob_[static_cast<std::size_t>(v)]; }

  /// Node ids at depth t, in construction order.
  std::span<const NodeId> at_depth(int t) const;
  std::span<const NodeId> leaves() const { return at_depth(depth_); }

  /// The depth-t ancestor of v (v itself when depth(v) == t). Requires
  /// t <= depth(v).
  NodeId ancestor_at(NodeId v, int t) const;

  /// True if `descendant` lies in the subtree rooted at `ancestor`
  /// (inclusive).
  bool is_ancestor(NodeId ancestor, NodeId descendant) const;

  /// Deterministic chain 0 -> 1 -> ... -> depth, one node per level.
  static FilteredTree chain(int depth);

 private:
  friend class TreeBuilder;

  int depth_ = 0;
  std::vector<Node> nodes_;
  std::vector<double> path_prob_;
  std::vector<std::vector<NodeId>> by_depth_;
};

/// Incremental construction; build() validates all tree invariants and
/// throws std::invalid_argument on violation.
class TreeBuilder {
 public:
  TreeBuilder();
  NodeId root() const { return FilteredTree::kRoot; }
  NodeId add_child(NodeId parent, double branch_prob);
  FilteredTree build() &&;

 private:
  std::vector<FilteredTree::Node> nodes_;
};

/// One real value per node; the discrete stand-in for an adapted process
/// (adaptedness is structural: a node is an atom of its depth's
/// sigma-algebra).
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  explicit AdaptedProcess(const FilteredTree& tree, double value = 0.0)
      : values_(tree.node_count(), value) {}
  AdaptedProcess(const FilteredTree& tree, std::vector<double> values);

  double operator[](NodeId v) const { return values_[static_cast<std::size_t>(v)]; }
  double& operator[](NodeId v) { return values_[static_cast<std::size_t>(v)]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// A stop/continue flag per node. Satisfies the stopping-time contract when
/// every root-to-leaf path carries exactly one stop flag.
class StoppingRule {
 public:
  StoppingRule() = default;
  explicit StoppingRule(const FilteredTree& tree) : stop_(tree.node_count(), 0) {}

  bool stops_at(NodeId v) const { return stop_[static_cast<std::size_t>(v)] != 0; }
  void set_stop(NodeId v, bool stop = true) {
    stop_[static_cast<std::size_t>(v)] = stop ? 1 : 0;
  }
  std::size_t size() const { return stop_.size(); }

 private:
  std::vector<std::uint8_t> stop_;
};

/// True iff every root-to-leaf path stops exactly once.
bool is_valid_rule(const FilteredTree& tree, const StoppingRule& rule);

/// Conditional expectation with respect to the depth-t sigma-algebra, applied
/// to the terminal cross-section of X. At nodes of depth <= t the result is
/// the probability-weighted average of X over the leaves below; at deeper
/// nodes it is copied from the depth-t ancestor, so the result is constant on
/// every conditioning atom.
AdaptedProcess conditional_expectation(const FilteredTree& tree, const AdaptedProcess& x, int t);

/// Backward induction: S = h at the leaves, S = max(h, E[S_next | node])
/// inside. The root value is the optimal-stopping value sup over all rules of
/// the expected stopped payoff.
AdaptedProcess snell_envelope(const FilteredTree& tree, const AdaptedProcess& h);

/// Number of stopping rules, via N(node) = 1 for leaves and
/// 1 + prod_children N(child) otherwise. Exact while below 2^53; saturates to
/// +inf beyond.
double count_stopping_rules(const FilteredTree& tree);

/// All valid stopping rules, each exactly once. Refuses (std::length_error,
/// message contains the computed count) when count_stopping_rules exceeds
/// max_rules.
std::vector<StoppingRule> enumerate_stopping_rules(const FilteredTree& tree,
                                                   double max_rules = 1e6);

/// Expected stopped payoff: sum over stop nodes of path probability times h.
double evaluate_stopped(const FilteredTree& tree, const AdaptedProcess& h,
                        const StoppingRule& rule);

/// The rule that stops at the first node where h meets its Snell envelope
/// (relative tolerance 1e-9; ties stop). Always valid, and achieves the Snell
/// root value.
StoppingRule earliest_optimal_rule(const FilteredTree& tree, const AdaptedProcess& h);

}  // namespace rstop
