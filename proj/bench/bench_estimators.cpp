#include <benchmark/benchmark.h>

#include "mdslab/coboundary.hpp"
#include "mdslab/empirics.hpp"
#include "mdslab/parallel.hpp"

using namespace mdslab;

namespace {

const MdsModel kModel = PredictableScaleRademacher{1.0, 1.5, 0.5};

void BM_DeltaSerial(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_delta_n_serial(kModel, n, 20000, {1, 0, 0}).ks);
  state.SetItemsProcessed(state.iterations() * 20000 * static_cast<std::int64_t>(n));
}

void BM_DeltaParallel(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_delta_n(kModel, n, 20000, {1, 0, 0}).ks);
  state.SetItemsProcessed(state.iterations() * 20000 * static_cast<std::int64_t>(n));
  state.counters["workers"] = default_workers();
}

void BM_LinearSerial(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FiniteCoeffs c{0, {1.0, 1.0}};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_linear_process_serial(c, ScaledRademacher{1.0}, n, 20000, {1, 0, 0}).f.ks);
  state.SetItemsProcessed(state.iterations() * 20000 * static_cast<std::int64_t>(n));
}

void BM_LinearParallel(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FiniteCoeffs c{0, {1.0, 1.0}};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_linear_process(c, ScaledRademacher{1.0}, n, 20000, {1, 0, 0}).f.ks);
  state.SetItemsProcessed(state.iterations() * 20000 * static_cast<std::int64_t>(n));
  state.counters["workers"] = default_workers();
}

} // namespace

BENCHMARK(BM_DeltaSerial)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DeltaParallel)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LinearSerial)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LinearParallel)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
