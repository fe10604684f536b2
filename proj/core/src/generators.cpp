#include "rstop/generators.hpp"

#include <stdexcept>

#include "rstop/counter_rng.hpp"

namespace rstop {

namespace {

FilteredTree draw_tree(const RandomTreeOptions& options, RandomStream& rng) {
  const int depth = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                            std::max(1, options.max_depth))));
  TreeBuilder builder;
  std::vector<NodeId> frontier = {builder.root()};
  for (int t = 0; t < depth; ++t) {
    std::vector<NodeId> next;
    for (NodeId v : frontier) {
      const int arity = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                std::max(1, options.max_branching))));
      std::vector<double> weights(static_cast<std::size_t>(arity));
      double sum = 0.0;
      for (auto& w : weights) {
        w = rng.uniform(options.min_branch_prob, 1.0);
        sum += w;
      }
      double assigned = 0.0;
      for (int i = 0; i < arity; ++i) {
        // Last child takes the exact remainder so siblings sum to 1.
        const double p = (i + 1 == arity) ? 1.0 - assigned
                                          : weights[static_cast<std::size_t>(i)] / sum;
        assigned += p;
        next.push_back(builder.add_child(v, p));
      }
    }
    frontier = std::move(next);
  }
  return std::move(builder).build();
}

}  // namespace

FilteredTree random_tree(const RandomTreeOptions& options, std::uint64_t seed) {
  if (options.max_depth < 1 || options.max_branching < 1) {
    throw std::invalid_argument("random_tree: depth and branching must be >= 1");
  }
  RandomStream rng(seed, /*stream=*/0x7265657Bu);
  for (int attempt = 0; attempt < 256; ++attempt) {
    FilteredTree tree = draw_tree(options, rng);
    if (count_stopping_rules(tree) <= options.max_rules) return tree;
  }
  throw std::runtime_error("random_tree: could not draw a tree under the rule cap");
}

AdaptedProcess random_payoffs(const FilteredTree& tree, double lo, double hi,
                              std::uint64_t seed) {
  if (!(lo <= hi)) throw std::invalid_argument("random_payoffs: empty range");
  RandomStream rng(seed, /*stream=*/0x7061794Fu);
  AdaptedProcess h(tree);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    h[static_cast<NodeId>(i)] = rng.uniform(lo, hi);
  }
  return h;
}

RandomizedPlan random_plan(const FilteredTree& tree, std::uint64_t seed) {
  RandomStream rng(seed, /*stream=*/0x706C614Eu);
  RandomizedPlan plan(tree);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const auto v = static_cast<NodeId>(i);
    if (!tree.is_leaf(v)) plan.set_stop_prob(tree, v, rng.uniform());
  }
  return plan;
}

}  // namespace rstop
