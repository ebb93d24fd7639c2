#include "phmoe/emfit.hpp"
#include "phmoe/simulate.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace phmoe;

namespace {

Matrix coxian(int p) {
  Matrix T = Matrix::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    T(k, k) = -(1.0 + 0.3 * k);
    if (k + 1 < p) T(k, k + 1) = 0.7 * (1.0 + 0.3 * k);
  }
  return T;
}

void BM_Expm(benchmark::State& state) {
  const Matrix T = coxian(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(expm(T, 2.5));
}
BENCHMARK(BM_Expm)->Arg(3)->Arg(5)->Arg(10)->Arg(20);

void BM_VanLoan(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const SubIntensityMatrix T(coxian(p));
  const RowVector pi = RowVector::Constant(p, 1.0 / p);
  for (auto _ : state)
    benchmark::DoNotOptimize(expm_rank_one_integral(T, T.exit_rates(), pi, 2.5));
}
BENCHMARK(BM_VanLoan)->Arg(3)->Arg(5)->Arg(10);

void BM_EStepBatch(benchmark::State& state) {
  const Dataset ds = scenario_gamma_groups(11, static_cast<int>(state.range(0)) / 4);
  const int p = 5;
  const PhMoeModel model(ds.schema, GatingCoefficients::zeros(p, ds.schema.design_width()),
                         SubIntensityMatrix(coxian(p)), Transform::identity());
  for (auto _ : state) benchmark::DoNotOptimize(estep_batch(model, ds.observations));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStepBatch)->Arg(400)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
