#include <benchmark/benchmark.h>

#include "rstop/counter_rng.hpp"
#include "rstop/derandomize.hpp"
#include "rstop/diffusion.hpp"
#include "rstop/filtered_tree.hpp"
#include "rstop/generators.hpp"
#include "rstop/model_registry.hpp"

namespace {

void BM_PhiloxNormals(benchmark::State& state) {
  rstop::CounterRng rng(42, 7);
  std::uint64_t i = 0;
  double acc = 0.0;
  for (auto _ : state) {
    acc += rng.normal(i++);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PhiloxNormals);

void BM_SnellEnvelope(benchmark::State& state) {
  rstop::RandomTreeOptions options;
  options.max_depth = static_cast<int>(state.range(0));
  options.max_branching = 2;
  options.max_rules = 1e18;
  const auto tree = rstop::random_tree(options, 11);
  const auto payoff = rstop::random_payoffs(tree, -1.0, 1.0, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rstop::snell_envelope(tree, payoff));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(tree.node_count()));
}
BENCHMARK(BM_SnellEnvelope)->Arg(8)->Arg(12);

void BM_PlanToRule(benchmark::State& state) {
  rstop::RandomTreeOptions options;
  options.max_depth = 4;
  options.max_branching = 3;
  const auto tree = rstop::random_tree(options, 21);
  const auto payoff = rstop::random_payoffs(tree, -1.0, 1.0, 22);
  const auto plan = rstop::random_plan(tree, 23);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rstop::plan_to_rule(tree, payoff, plan));
  }
}
BENCHMARK(BM_PlanToRule);

void BM_PathSimulation(benchmark::State& state) {
  const auto model = rstop::make_model("bm-quadratic", {});
  rstop::ControlPolicy control{"passive", 1,
                               [](double, std::span<const double>) { return 0.0; }};
  rstop::StopPolicy never{"never", [](double, std::span<const double>) { return false; }};
  rstop::SimSpec spec;
  spec.steps = static_cast<int>(state.range(0));
  spec.paths = 1024;
  spec.seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rstop::estimate_stopped_value(model, control, never, spec));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(spec.paths) * spec.steps);
}
BENCHMARK(BM_PathSimulation)->Arg(128)->Arg(512);

void BM_LatticeSnell(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rstop::brownian_lattice_snell(
        0.0, 0.0, 1.0, steps, [](double, double x) { return x * x; }));
  }
}
BENCHMARK(BM_LatticeSnell)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
