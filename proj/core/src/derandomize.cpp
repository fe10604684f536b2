#include "rstop/derandomize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rstop {

namespace {

constexpr double kWeightTol = 1e-12;
// Remaining-weight threshold below which an atom is treated as carrying its
// full mass at the current stage.
constexpr double kResidualFloor = 1e-14;

}  // namespace

StagePayoffs::StagePayoffs(const FilteredTree& tree, std::vector<int> stage_depths,
                           std::vector<AdaptedProcess> payoffs,
                           std::vector<AdaptedProcess> weights)
    : tree_(&tree),
      depths_(std::move(stage_depths)),
      payoffs_(std::move(payoffs)),
      weights_(std::move(weights)) {
  const std::size_t n = depths_.size();
  if (n == 0) throw std::invalid_argument("StagePayoffs: at least one stage required");
  if (payoffs_.size() != n || weights_.size() != n) {
    throw std::invalid_argument("StagePayoffs: one payoff and one weight process per stage");
  }
  int prev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (depths_[i] < prev || depths_[i] > tree.depth()) {
      throw std::invalid_argument("StagePayoffs: stage depths must be nondecreasing in range");
    }
    prev = depths_[i];
    if (payoffs_[i].size() != tree.node_count() || weights_[i].size() != tree.node_count()) {
      throw std::invalid_argument("StagePayoffs: processes must be total on the tree");
    }
    for (NodeId atom : tree.at_depth(depths_[i])) {
      if (!(weights_[i][atom] >= 0.0)) {
        throw std::invalid_argument("StagePayoffs: negative stage weight");
      }
      if (!std::isfinite(payoffs_[i][atom])) {
        throw std::invalid_argument("StagePayoffs: non-finite stage payoff");
      }
    }
  }
  for (NodeId leaf : tree.leaves()) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += weights_[i][tree.ancestor_at(leaf, depths_[i])];
    }
    if (std::abs(total - 1.0) > kWeightTol) {
      throw std::invalid_argument("StagePayoffs: weights along a path sum to " +
                                  std::to_string(total));
    }
  }
}

double StagePayoffs::weighted_value(NodeId first_stage_atom) const {
  const FilteredTree& tree = *tree_;
  if (tree.node(first_stage_atom).depth != depths_.front()) {
    throw std::invalid_argument("StagePayoffs::weighted_value: not a first-stage atom");
  }
  const double p_atom = tree.path_probability(first_stage_atom);
  double value = 0.0;
  for (NodeId leaf : tree.leaves()) {
    if (!tree.is_ancestor(first_stage_atom, leaf)) continue;
    double along = 0.0;
    for (std::size_t i = 0; i < depths_.size(); ++i) {
      const NodeId atom = tree.ancestor_at(leaf, depths_[i]);
      along += payoffs_[i][atom] * weights_[i][atom];
    }
    value += tree.path_probability(leaf) / p_atom * along;
  }
  return value;
}

bool is_valid_partition(const StagePayoffs& stages, const StagePartition& partition) {
  const FilteredTree& tree = stages.tree();
  if (partition.stage_atoms.size() != stages.stage_count()) return false;
  for (std::size_t i = 0; i < stages.stage_count(); ++i) {
    for (NodeId atom : partition.stage_atoms[i]) {
      if (tree.node(atom).depth != stages.stage_depth(i)) return false;
    }
  }
  // Disjoint and exhaustive as events: every path meets exactly one atom.
  for (NodeId leaf : tree.leaves()) {
    int hits = 0;
    for (std::size_t i = 0; i < stages.stage_count(); ++i) {
      const NodeId anc = tree.ancestor_at(leaf, stages.stage_depth(i));
      for (NodeId atom : partition.stage_atoms[i]) {
        if (atom == anc) ++hits;
      }
    }
    if (hits != 1) return false;
  }
  return true;
}

namespace {

// E[ sum_{j > i} payoff_j * weight_j * scale | atom ] of the renormalized
// subproblem hanging below `atom`.
double continuation_value(const StagePayoffs& stages, std::size_t i, NodeId atom,
                          double scale) {
  const FilteredTree& tree = stages.tree();
  const double p_atom = tree.path_probability(atom);
  double value = 0.0;
  for (NodeId leaf : tree.leaves()) {
    if (!tree.is_ancestor(atom, leaf)) continue;
    double along = 0.0;
    for (std::size_t j = i + 1; j < stages.stage_count(); ++j) {
      const NodeId a = tree.ancestor_at(leaf, stages.stage_depth(j));
      along += stages.payoff(j, a) * stages.weight(j, a);
    }
    value += tree.path_probability(leaf) / p_atom * along * scale;
  }
  return value;
}

}  // namespace

StagePartition derandomize_partition(const StagePayoffs& stages,
                                     std::vector<PartitionTraceEntry>* trace) {
  const FilteredTree& tree = stages.tree();
  const std::size_t n = stages.stage_count();

  StagePartition partition;
  partition.stage_atoms.resize(n);

  struct Alive {
    NodeId atom;
    double factor;  // accumulated renormalization of this subtree's weights
  };
  std::vector<Alive> alive;
  for (NodeId atom : tree.at_depth(stages.stage_depth(0))) alive.push_back({atom, 1.0});

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Alive> next;
    for (const auto& [atom, factor] : alive) {
      const double weight_here = stages.weight(i, atom) * factor;
      const double residual = 1.0 - weight_here;
      const bool last = (i + 1 == n);
      const bool forced = last || residual < kResidualFloor;

      double payoff_here = stages.payoff(i, atom);
      double continuation = 0.0;
      bool assign = forced;
      if (!forced) {
        continuation = continuation_value(stages, i, atom, factor / residual);
        assign = payoff_here >= continuation;  // ties stop
      }
      if (trace) {
        trace->push_back({i, atom, payoff_here, continuation, assign, forced});
      }
      if (assign) {
        partition.stage_atoms[i].push_back(atom);
      } else {
        const double child_factor = factor / residual;
        for (NodeId b : tree.at_depth(stages.stage_depth(i + 1))) {
          if (tree.is_ancestor(atom, b)) next.push_back({b, child_factor});
        }
      }
    }
    alive = std::move(next);
  }
  return partition;
}

std::vector<std::pair<double, double>> partition_improvement(const StagePayoffs& stages,
                                                             const StagePartition& partition) {
  const FilteredTree& tree = stages.tree();
  std::vector<std::pair<double, double>> values;
  for (NodeId atom : tree.at_depth(stages.stage_depth(0))) {
    const double weighted = stages.weighted_value(atom);
    double stopped = 0.0;
    for (std::size_t i = 0; i < stages.stage_count(); ++i) {
      for (NodeId b : partition.stage_atoms[i]) {
        if (tree.is_ancestor(atom, b)) {
          stopped += tree.path_probability(b) / tree.path_probability(atom) *
                     stages.payoff(i, b);
        }
      }
    }
    values.emplace_back(weighted, stopped);
  }
  return values;
}

StoppingRule plan_to_rule(const FilteredTree& tree, const AdaptedProcess& h,
                          const RandomizedPlan& plan,
                          std::vector<PartitionTraceEntry>* trace) {
  if (h.size() != tree.node_count()) {
    throw std::invalid_argument("plan_to_rule: process not defined on this tree");
  }
  const AdaptedProcess increments = path_increments(tree, plan);

  std::vector<int> depths(static_cast<std::size_t>(tree.depth()) + 1);
  for (std::size_t i = 0; i < depths.size(); ++i) depths[i] = static_cast<int>(i);
  std::vector<AdaptedProcess> payoffs(depths.size(), h);
  std::vector<AdaptedProcess> weights(depths.size(), increments);

  const StagePayoffs stages(tree, std::move(depths), std::move(payoffs), std::move(weights));
  const StagePartition partition = derandomize_partition(stages, trace);

  StoppingRule rule(tree);
  for (const auto& atoms : partition.stage_atoms) {
    for (NodeId atom : atoms) rule.set_stop(atom);
  }
  return rule;
}

PiecewiseDiscretization piecewise_discretize(const PayoffPath& h, const CdfPath& cdf,
                                             int level) {
  if (level < 1) throw std::invalid_argument("piecewise_discretize: level must be >= 1");
  const double horizon = cdf.horizon();
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("piecewise_discretize: degenerate horizon");
  }

  const auto cells = std::size_t{1} << static_cast<unsigned>(level);
  std::vector<double> grid;
  grid.reserve(cells + 8);
  for (std::size_t i = 1; i <= cells; ++i) {
    grid.push_back(horizon * static_cast<double>(i) / static_cast<double>(cells));
  }
  for (double t : cdf.jump_times()) {
    if (t > 0.0 && t < horizon) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> values;
  values.reserve(grid.size());
  for (double t : grid) values.push_back(h(t));
  PayoffPath step = PayoffPath::step(h(0.0), grid, values);

  PiecewiseDiscretization out{step, 0.0};
  out.discrepancy = stieltjes_distance(h, step, cdf);
  return out;
}

}  // namespace rstop
