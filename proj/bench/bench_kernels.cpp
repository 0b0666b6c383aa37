#include <benchmark/benchmark.h>

#include <vector>

#include "qotlab/kernels.hpp"
#include "qotlab/qot_solver.hpp"

using namespace qotlab;

namespace {

DiscreteMeasure grid_for(int n_per_axis, int d) {
  return uniform_ball_grid(d, 2.0 / n_per_axis);
}

kernels::Execution exec_of(const benchmark::State& state) {
  return state.range(2) == 0 ? kernels::Execution::serial : kernels::Execution::parallel;
}

void BM_UpdateBlock(benchmark::State& state) {
  const DiscreteMeasure mu = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const kernels::CostMatrix cost(mu, mu);
  std::vector<double> other(mu.size(), 0.01);
  std::vector<double> w(mu.weights().data(), mu.weights().data() + mu.size());
  std::vector<double> out(mu.size());
  for (auto _ : state) {
    kernels::update_block(exec_of(state), cost, true, other, w, 1e-3, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["atoms"] = static_cast<double>(mu.size());
}

void BM_BlockResidual(benchmark::State& state) {
  const DiscreteMeasure mu = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const kernels::CostMatrix cost(mu, mu);
  std::vector<double> own(mu.size(), 0.01);
  std::vector<double> w(mu.weights().data(), mu.weights().data() + mu.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::block_residual(exec_of(state), cost, false, own, own, w, 1e-3));
  }
  state.counters["atoms"] = static_cast<double>(mu.size());
}

void BM_Solve(benchmark::State& state) {
  const DiscreteMeasure mu = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  SolverConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.execution = exec_of(state);
  for (auto _ : state) {
    const DualPotentials pot = solve(mu, mu, cfg);
    benchmark::DoNotOptimize(pot.f.data());
  }
  state.counters["atoms"] = static_cast<double>(mu.size());
}

// Args: atoms per axis, dimension, execution (0 serial, 1 parallel).
void Sizes(benchmark::internal::Benchmark* b) {
  for (int exec : {0, 1}) {
    b->Args({400, 1, exec});
    b->Args({40, 2, exec});
  }
}

}  // namespace

BENCHMARK(BM_UpdateBlock)->Apply(Sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockResidual)->Apply(Sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->Apply(Sizes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
