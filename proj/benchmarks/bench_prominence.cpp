#include <benchmark/benchmark.h>

#include "prosobench/audio.hpp"
#include "prosobench/prominence.hpp"
#include "prosobench/rng.hpp"
#include "synth/synth.hpp"

using namespace prosobench;

namespace {

std::vector<double> noise(std::size_t n) {
  Rng rng(1);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return moving_average(v, 4);
}

void BM_Cwt(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  const ProminenceConfig c;
  const auto scales = dyadic_scales(c.scale_min, c.octaves, c.voices_per_octave);
  for (auto _ : state) benchmark::DoNotOptimize(cwt_ricker(x, scales, 0.01));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cwt)->Arg(1200)->Arg(6000)->Arg(30000);

void BM_TraceLoma(benchmark::State& state) {
  const ProminenceConfig c;
  const auto cwt = cwt_ricker(noise(6000), dyadic_scales(c.scale_min, c.octaves, c.voices_per_octave), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(trace_loma(cwt));
}
BENCHMARK(BM_TraceLoma);

void BM_PitchTrack(benchmark::State& state) {
  const auto s = synth::sine(180.0, static_cast<double>(state.range(0)), 16000.0);
  for (auto _ : state) benchmark::DoNotOptimize(extract_f0(s));
  state.SetLabel(std::to_string(state.range(0)) + " s at 16 kHz");
}
BENCHMARK(BM_PitchTrack)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
