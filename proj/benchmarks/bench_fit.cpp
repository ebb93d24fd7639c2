#include "phmoe/emfit.hpp"
#include "phmoe/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace phmoe;

namespace {

// A fixed number of EM iterations; the tolerance is set so the loop never
// stops early.
void BM_FitIterations(benchmark::State& state) {
  const Dataset ds = scenario_gamma_groups(3, 250);
  FitConfig cfg;
  cfg.p = static_cast<int>(state.range(0));
  cfg.max_iterations = 5;
  cfg.loglik_tolerance = 0.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(ds.observations, ds.schema, TransformFamily::Identity, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.max_iterations);
}
BENCHMARK(BM_FitIterations)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_FitParetoThetaStep(benchmark::State& state) {
  const Dataset ds = scenario_gamma_groups(3, 250);
  FitConfig cfg;
  cfg.p = 3;
  cfg.max_iterations = 2;
  cfg.loglik_tolerance = 0.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(ds.observations, ds.schema, TransformFamily::Pareto, cfg));
}
BENCHMARK(BM_FitParetoThetaStep)->Unit(benchmark::kMillisecond);

}  // namespace
