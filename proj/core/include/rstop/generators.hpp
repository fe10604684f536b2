#pragma once

#include <cstdint>

#include "rstop/filtered_tree.hpp"
#include "rstop/randomized_plan.hpp"

namespace rstop {

/// Knobs for the seeded random-tree generator used by property tests and the
/// experiment corpus modes.
struct RandomTreeOptions {
  int max_depth = 4;
  int max_branching = 3;
  /// Trees admitting more stopping rules than this are redrawn, so
  /// enumeration stays feasible.
  double max_rules = 1e4;
  double min_branch_prob = 0.05;
};

/// Deterministic function of (options, seed). All leaves sit at a common
/// depth drawn from {1, ..., max_depth}; child probabilities are drawn away
/// from zero and renormalized.
FilteredTree random_tree(const RandomTreeOptions& options, std::uint64_t seed);

/// One uniform value in [lo, hi] per node.
AdaptedProcess random_payoffs(const FilteredTree& tree, double lo, double hi,
                              std::uint64_t seed);

/// Conditional stopping probabilities drawn independently uniform on [0, 1];
/// leaves stay pinned at 1.
RandomizedPlan random_plan(const FilteredTree& tree, std::uint64_t seed);

}  // namespace rstop
