#include "rstop/filtered_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rstop {

namespace {
constexpr double kProbTol = 1e-12;
}

std::span<const NodeId> FilteredTree::at_depth(int t) const {
  if (t < 0 || t > depth_) throw std::out_of_range("FilteredTree::at_depth: t out of range");
  return by_depth_[static_cast<std::size_t>(t)];
}

NodeId FilteredTree::ancestor_at(NodeId v, int t) const {
  if (t < 0 || t > node(v).depth) {
    throw std::out_of_range("FilteredTree::ancestor_at: t out of range");
  }
  while (node(v).depth > t) v = node(v).parent;
  return v;
}

bool FilteredTree::is_ancestor(NodeId ancestor, NodeId descendant) const {
  const int ad = node(ancestor).depth;
  if (node(descendant).depth < ad) return false;
  return ancestor_at(descendant, ad) == ancestor;
}

FilteredTree FilteredTree::chain(int depth) {
  TreeBuilder builder;
  NodeId v = builder.root();
  for (int t = 0; t < depth; ++t) v = builder.add_child(v, 1.0);
  return std::move(builder).build();
}

TreeBuilder::TreeBuilder() { nodes_.emplace_back(); }

NodeId TreeBuilder::add_child(NodeId parent, double branch_prob) {
  if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size()) {
    throw std::invalid_argument("TreeBuilder::add_child: unknown parent");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  FilteredTree::Node n;
  n.parent = parent;
  n.depth = nodes_[static_cast<std::size_t>(parent)].depth + 1;
  n.branch_prob = branch_prob;
  nodes_.push_back(std::move(n));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

FilteredTree TreeBuilder::build() && {
  FilteredTree tree;
  tree.nodes_ = std::move(nodes_);

  int depth = 0;
  for (const auto& n : tree.nodes_) depth = std::max(depth, static_cast<int>(n.depth));
  tree.depth_ = depth;

  tree.by_depth_.assign(static_cast<std::size_t>(depth) + 1, {});
  tree.path_prob_.assign(tree.nodes_.size(), 1.0);
  for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
    const auto& n = tree.nodes_[i];
    const auto id = static_cast<NodeId>(i);
    tree.by_depth_[static_cast<std::size_t>(n.depth)].push_back(id);
    if (n.parent >= 0) {
      if (!(n.branch_prob > 0.0) || n.branch_prob > 1.0) {
        throw std::invalid_argument("FilteredTree: branch probability must lie in (0, 1]");
      }
      tree.path_prob_[i] =
          tree.path_prob_[static_cast<std::size_t>(n.parent)] * n.branch_prob;
      if (!(tree.path_prob_[i] > 0.0)) {
        throw std::invalid_argument("FilteredTree: vanishing path probability");
      }
    }
    if (n.children.empty()) {
      if (n.depth != depth) {
        throw std::invalid_argument("FilteredTree: leaf above the terminal depth (node " +
                                    std::to_string(i) + ")");
      }
    } else {
      double sum = 0.0;
      for (NodeId c : n.children) sum += tree.nodes_[static_cast<std::size_t>(c)].branch_prob;
      if (std::abs(sum - 1.0) > kProbTol) {
        throw std::invalid_argument("FilteredTree: child probabilities of node " +
                                    std::to_string(i) + " sum to " + std::to_string(sum));
      }
    }
  }
  return tree;
}

AdaptedProcess::AdaptedProcess(const FilteredTree& tree, std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.size() != tree.node_count()) {
    throw std::invalid_argument("AdaptedProcess: one value per tree node required");
  }
}

bool is_valid_rule(const FilteredTree& tree, const StoppingRule& rule) {
  if (rule.size() != tree.node_count()) return false;
  // Count stop flags on the path to every leaf.
  for (NodeId leaf : tree.leaves()) {
    int stops = 0;
    for (NodeId v = leaf; v >= 0; v = tree.node(v).parent) {
      if (rule.stops_at(v)) ++stops;
    }
    if (stops != 1) return false;
  }
  return true;
}

namespace {

void check_total(const FilteredTree& tree, const AdaptedProcess& x, const char* op) {
  if (x.size() != tree.node_count()) {
    throw std::invalid_argument(std::string(op) + ": process not defined on this tree");
  }
}

// E[x restricted to the leaves | node v], for every v, by one backward sweep.
std::vector<double> leaf_expectation(const FilteredTree& tree, const AdaptedProcess& x) {
  std::vector<double> e(tree.node_count(), 0.0);
  for (int t = tree.depth(); t >= 0; --t) {
    for (NodeId v : tree.at_depth(t)) {
      const auto& n = tree.node(v);
      if (n.children.empty()) {
        e[static_cast<std::size_t>(v)] = x[v];
      } else {
        double sum = 0.0;
        for (NodeId c : n.children) {
          sum += tree.node(c).branch_prob * e[static_cast<std::size_t>(c)];
        }
        e[static_cast<std::size_t>(v)] = sum;
      }
    }
  }
  return e;
}

}  // namespace

AdaptedProcess conditional_expectation(const FilteredTree& tree, const AdaptedProcess& x,
                                       int t) {
  check_total(tree, x, "conditional_expectation");
  if (t < 0 || t > tree.depth()) {
    throw std::out_of_range("conditional_expectation: t out of range");
  }
  const auto leaf_e = leaf_expectation(tree, x);
  AdaptedProcess out(tree);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto v = static_cast<NodeId>(i);
    const NodeId atom = tree.node(v).depth <= t ? v : tree.ancestor_at(v, t);
    out[v] = leaf_e[static_cast<std::size_t>(atom)];
  }
  return out;
}

AdaptedProcess snell_envelope(const FilteredTree& tree, const AdaptedProcess& h) {
  check_total(tree, h, "snell_envelope");
  AdaptedProcess s(tree);
  for (int t = tree.depth(); t >= 0; --t) {
    for (NodeId v : tree.at_depth(t)) {
      const auto& n = tree.node(v);
      if (n.children.empty()) {
        s[v] = h[v];
      } else {
        double cont = 0.0;
        for (NodeId c : n.children) cont += tree.node(c).branch_prob * s[c];
        s[v] = std::max(h[v], cont);
      }
    }
  }
  return s;
}

double count_stopping_rules(const FilteredTree& tree) {
  std::vector<double> n(tree.node_count(), 1.0);
  for (int t = tree.depth(); t >= 0; --t) {
    for (NodeId v : tree.at_depth(t)) {
      const auto& node = tree.node(v);
      if (node.children.empty()) continue;
      double prod = 1.0;
      for (NodeId c : node.children) prod *= n[static_cast<std::size_t>(c)];
      n[static_cast<std::size_t>(v)] = 1.0 + prod;
      if (!std::isfinite(n[static_cast<std::size_t>(v)])) {
        n[static_cast<std::size_t>(v)] = std::numeric_limits<double>::infinity();
      }
    }
  }
  return n[FilteredTree::kRoot];
}

namespace {

// Stop sets for the subtree rooted at v: either {v}, or one choice per child.
std::vector<std::vector<NodeId>> subtree_stop_sets(const FilteredTree& tree, NodeId v) {
  std::vector<std::vector<NodeId>> out;
  out.push_back({v});
  const auto& n = tree.node(v);
  if (n.children.empty()) return out;

  std::vector<std::vector<std::vector<NodeId>>> per_child;
  per_child.reserve(n.children.size());
  for (NodeId c : n.children) per_child.push_back(subtree_stop_sets(tree, c));

  std::vector<std::size_t> pick(per_child.size(), 0);
  while (true) {
    std::vector<NodeId> combined;
    for (std::size_t i = 0; i < per_child.size(); ++i) {
      const auto& states = per_child[i][pick[i]];
      combined.insert(combined.end(), states.begin(), states.end());
    }
    out.push_back(std::move(combined));
    std::size_t i = 0;
    for (; i < pick.size(); ++i) {
      if (++pick[i] < per_child[i].size()) break;
      pick[i] = 0;
    }
    if (i == pick.size()) break;
  }
  return out;
}

}  // namespace

std::vector<StoppingRule> enumerate_stopping_rules(const FilteredTree& tree, double max_rules) {
  const double count = count_stopping_rules(tree);
  if (!(count <= max_rules)) {
    throw std::length_error("enumerate_stopping_rules: tree admits " + std::to_string(count) +
                            " rules, above the cap of " + std::to_string(max_rules));
  }
  const auto stop_sets = subtree_stop_sets(tree, FilteredTree::kRoot);
  std::vector<StoppingRule> rules;
  rules.reserve(stop_sets.size());
  for (const auto& stops : stop_sets) {
    StoppingRule rule(tree);
    for (NodeId v : stops) rule.set_stop(v);
    rules.push_back(std::move(rule));
  }
  return rules;
}

double evaluate_stopped(const FilteredTree& tree, const AdaptedProcess& h,
                        const StoppingRule& rule) {
  check_total(tree, h, "evaluate_stopped");
  if (!is_valid_rule(tree, rule)) {
    throw std::invalid_argument("evaluate_stopped: invalid stopping rule");
  }
  double value = 0.0;
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto v = static_cast<NodeId>(i);
    if (rule.stops_at(v)) value += tree.path_probability(v) * h[v];
  }
  return value;
}

StoppingRule earliest_optimal_rule(const FilteredTree& tree, const AdaptedProcess& h) {
  const AdaptedProcess s = snell_envelope(tree, h);
  StoppingRule rule(tree);
  // Depth-first: flag the first node on each path where h reaches the
  // envelope (ties stop); skip subtrees under a flagged node.
  std::vector<NodeId> stack = {FilteredTree::kRoot};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    const double tol = 1e-9 * std::max({1.0, std::abs(h[v]), std::abs(s[v])});
    if (std::abs(h[v] - s[v]) <= tol) {
      rule.set_stop(v);
      continue;
    }
    for (NodeId c : tree.node(v).children) stack.push_back(c);
  }
  return rule;
}

}  // namespace rstop
