#include <benchmark/benchmark.h>

#include "prosobench/ngram.hpp"
#include "prosobench/rng.hpp"

using namespace prosobench;

namespace {

/// Zipf-like text over `types` word types.
NgramModel::Utterances zipf_text(std::size_t tokens, std::size_t types) {
  std::vector<double> cdf(types);
  double total = 0.0;
  for (std::size_t i = 0; i < types; ++i) cdf[i] = total += 1.0 / static_cast<double>(i + 1);
  Rng rng(3);
  NgramModel::Utterances out;
  std::size_t n = 0;
  while (n < tokens) {
    std::vector<std::string> u(5 + rng.index(15));
    for (auto& w : u) {
      const double r = rng.uniform() * total;
      w = "w" + std::to_string(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    }
    n += u.size();
    out.push_back(std::move(u));
  }
  return out;
}

void BM_KneserNeyTrain(benchmark::State& state) {
  const auto text = zipf_text(static_cast<std::size_t>(state.range(0)), 5000);
  for (auto _ : state) benchmark::DoNotOptimize(NgramModel::train(text));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KneserNeyTrain)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_KneserNeySurprisal(benchmark::State& state) {
  const auto model = NgramModel::train(zipf_text(100000, 5000));
  const auto held = zipf_text(10000, 6000);
  std::size_t n = 0;
  for (const auto& u : held) n += u.size();
  for (auto _ : state)
    for (const auto& u : held) benchmark::DoNotOptimize(model.surprisal(u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_KneserNeySurprisal)->Unit(benchmark::kMillisecond);

}  // namespace
