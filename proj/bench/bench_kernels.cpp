#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "weave/stats/calibration.hpp"
#include "weave/stats/kernels.hpp"

using namespace weave::stats;

namespace {

std::vector<double> cube(CubeShape s) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 1.0);
  std::vector<double> y(s.size());
  for (auto& v : y) v = n(rng);
  return y;
}

template <MarginalFit (*Fit)(std::span<const double>, CubeShape)>
void BM_MarginalMeans(benchmark::State& state) {
  const CubeShape s{9, 3, static_cast<std::size_t>(state.range(0))};
  const auto y = cube(s);
  for (auto _ : state) benchmark::DoNotOptimize(Fit(y, s));
  state.SetItemsProcessed(state.iterations() * s.size());
}

template <std::vector<double> (*Resid)(std::span<const double>, CubeShape, const MarginalFit&, FactorMask)>
void BM_Residuals(benchmark::State& state) {
  const CubeShape s{9, 3, static_cast<std::size_t>(state.range(0))};
  const auto y = cube(s);
  const auto fit = reference::marginal_means(y, s);
  for (auto _ : state) benchmark::DoNotOptimize(Resid(y, s, fit, {}));
  state.SetItemsProcessed(state.iterations() * s.size());
}

void BM_Calibrate(benchmark::State& state) {
  SyntheticParams p;
  for (auto _ : state) benchmark::DoNotOptimize(calibrate(p, state.range(0), 1));
}

void BM_CalibrateSerial(benchmark::State& state) {
  SyntheticParams p;
  for (auto _ : state) benchmark::DoNotOptimize(reference::calibrate(p, state.range(0), 1));
}

}  // namespace

BENCHMARK(BM_MarginalMeans<kernels::marginal_means>)->Arg(40)->Arg(4000)->Arg(40000);
BENCHMARK(BM_MarginalMeans<reference::marginal_means>)->Arg(40)->Arg(4000)->Arg(40000);
BENCHMARK(BM_Residuals<kernels::residuals>)->Arg(40)->Arg(4000)->Arg(40000);
BENCHMARK(BM_Residuals<reference::residuals>)->Arg(40)->Arg(4000)->Arg(40000);
BENCHMARK(BM_Calibrate)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CalibrateSerial)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
