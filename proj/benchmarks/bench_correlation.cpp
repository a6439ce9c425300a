#include <benchmark/benchmark.h>

#include "rgbt/fusion.hpp"
#include "rgbt/rng.hpp"
#include "rgbt/tracking.hpp"

namespace {

rgbt::Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  rgbt::Rng rng(seed);
  return rgbt::Tensor::uniform(std::move(shape), rng, -1.0, 1.0);
}

void BM_NccCorrelate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto search = random_tensor({8, side, side}, 1);
  const auto tmpl = random_tensor({8, 5, 5}, 2);
  for (auto _ : state) {
    auto r = rgbt::ncc_correlate(search, tmpl);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_NccCorrelate)->Arg(16)->Arg(24)->Arg(32);

void BM_MamConfidence(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto x = random_tensor({8, side, side}, 3);
  const auto params = rgbt::MamParams::seeded(8, 2, 4);
  for (auto _ : state) {
    auto m = rgbt::mam_confidence(x, params);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_MamConfidence)->Arg(12)->Arg(21);

void BM_DffFuse(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto v = random_tensor({8, side, side}, 5);
  const auto t = random_tensor({8, side, side}, 6);
  const auto params = rgbt::DffParams::seeded(8, 8, 7);
  for (auto _ : state) {
    auto r = rgbt::dff_fuse(v, t, params);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_DffFuse)->Arg(16)->Arg(32);

}  // namespace
