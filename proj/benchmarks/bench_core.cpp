#include <benchmark/benchmark.h>

#include "dicke/dynamics.hpp"
#include "dicke/metrology.hpp"
#include "dicke/permsym.hpp"
#include "dicke/timebin.hpp"

namespace dicke {
namespace {

// One application of the ladder generator; cost grows with the sector count.
void BM_PermsymApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bool local = state.range(1) != 0;
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(n, 2.0, 1.0, local ? 0.1 : 0.0));
  const auto x = DickeLadderState::ground(gen.layout_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(gen.apply(x));
  state.counters["ladder"] = static_cast<double>(gen.size());
}
BENCHMARK(BM_PermsymApply)->ArgsProduct({{10, 20, 40}, {0, 1}});

// Exponential action over one unit of Gamma t.
void BM_EvolveUnitTime(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(n, 2.0));
  const auto x = DickeLadderState::ground(gen.layout_ptr());
  for (auto _ : state) benchmark::DoNotOptimize(evolve_permsym(gen, x, 1.0));
}
BENCHMARK(BM_EvolveUnitTime)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(static_cast<int>(state.range(0)), 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(gen));
}
BENCHMARK(BM_SteadyState)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

// Analytic two-bin states over a full lag scan sharing one propagation.
void BM_TwoBinAnalyticScan(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = ModelParams::at_ratio(n, 2.0);
  const auto gen = build_permsym_liouvillian(p);
  const auto rho = steady_state(gen);
  const auto grid = tau_grid_for(p, 3.0, 40);
  for (auto _ : state) benchmark::DoNotOptimize(two_bin_analytic_scan(gen, rho, 1e-4, grid));
  state.counters["lags"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_TwoBinAnalyticScan)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

// Exact collision-model bin states at a long gap via cached channel squarings.
void BM_TwoBinExactScan(benchmark::State& state) {
  const auto p = ModelParams::at_ratio(20, 2.0);
  const DiscreteChannel channel(p, 1e-4);
  const auto rho = channel.stationary();
  for (auto _ : state) benchmark::DoNotOptimize(two_bin_exact_scan(channel, rho, 1, {0, 1000, 10000, 30000}));
}
BENCHMARK(BM_TwoBinExactScan)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dicke

BENCHMARK_MAIN();
