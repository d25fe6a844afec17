#include <benchmark/benchmark.h>

#include "latwalk/green.hpp"
#include "latwalk/monte_carlo.hpp"
#include "latwalk/potential_kernel.hpp"

using namespace latwalk;

namespace {

void BM_StepSampling(benchmark::State& state) {
  const auto model = state.range(0) == 0 ? presets::srw() : presets::heavy_tail();
  const StepSampler sampler(model);
  PhiloxStream rng(1, 0);
  Point p{0, 0};
  for (auto _ : state) {
    p = p + sampler.sample(rng);
    benchmark::DoNotOptimize(p);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepSampling)->Arg(0)->Arg(1);

void BM_ExitTrajectories(benchmark::State& state) {
  const auto model = presets::srw();
  StoppingRule rule;
  rule.exit("tau", Region::disk(static_cast<double>(state.range(0))));
  McConfig cfg;
  cfg.n_samples = 256;
  cfg.workers = 1;
  for (auto _ : state) {
    const auto e = estimate_expectation(model, {0, 0}, rule, functional::constant(1.0), cfg);
    benchmark::DoNotOptimize(e.mean);
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_samples);
}
BENCHMARK(BM_ExitTrajectories)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_KernelFourier(benchmark::State& state) {
  const FourierKernel kernel(presets::srw(), 64);
  std::int32_t j = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel({j, 7}).value);
    j = j % 60 + 1;
  }
}
BENCHMARK(BM_KernelFourier)->Unit(benchmark::kMicrosecond);

void BM_GreenFactorization(benchmark::State& state) {
  const auto model = presets::srw();
  const Region domain = Region::disk(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    const GreenTable table(model, domain);
    benchmark::DoNotOptimize(table.value({0, 0}, {0, 0}));
  }
}
BENCHMARK(BM_GreenFactorization)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
