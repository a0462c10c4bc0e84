#include <benchmark/benchmark.h>

#include "prosobench/benchset.hpp"
#include "prosobench/evaluate.hpp"
#include "prosobench/rng.hpp"

using namespace prosobench;

namespace {

void BM_RandomBaseline(benchmark::State& state) {
  const auto trials = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(random_baseline(0.15, 100000, trials, 1));
  state.SetItemsProcessed(state.iterations() * trials * 100000);
}
BENCHMARK(BM_RandomBaseline)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Confusion(benchmark::State& state) {
  Rng rng(2);
  std::vector<bool> g(100000), p(100000);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = rng.bernoulli(0.15);
    p[i] = rng.bernoulli(0.2);
  }
  const auto gold = encode_bio(g);
  const auto pred = encode_bio(p);
  for (auto _ : state) benchmark::DoNotOptimize(prf(confusion(gold, pred)));
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_Confusion);

void BM_PointBiserial(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> x(100000);
  std::vector<bool> y(100000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.bernoulli(0.15);
  }
  for (auto _ : state) benchmark::DoNotOptimize(point_biserial(x, y));
}
BENCHMARK(BM_PointBiserial);

}  // namespace
