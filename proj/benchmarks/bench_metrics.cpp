#include <benchmark/benchmark.h>

#include "rgbt/metrics.hpp"
#include "rgbt/rng.hpp"

namespace {

rgbt::FrameMask random_mask(int side, std::uint64_t seed) {
  rgbt::Rng rng(seed);
  rgbt::FrameMask m(side, side);
  const int x0 = rng.uniform_int(0, side / 2), y0 = rng.uniform_int(0, side / 2);
  const int w = rng.uniform_int(2, side / 2), h = rng.uniform_int(2, side / 2);
  for (int y = y0; y < std::min(side, y0 + h); ++y)
    for (int x = x0; x < std::min(side, x0 + w); ++x) m.set(x, y, true);
  return m;
}

void BM_Iou(benchmark::State& state) {
  const rgbt::BoundingBox a{10, 12, 40, 30};
  const rgbt::BoundingBox b{25, 20, 35, 28};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rgbt::iou(a, b));
  }
}
BENCHMARK(BM_Iou);

void BM_FrameFScore(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto p = random_mask(side, 11);
  const auto g = random_mask(side, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rgbt::frame_f_score(p, g, 2.0));
  }
}
BENCHMARK(BM_FrameFScore)->Arg(32)->Arg(64)->Arg(128);

void BM_DistanceTransform(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto m = rgbt::boundary_mask(random_mask(side, 13));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rgbt::squared_distance_transform(m));
  }
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(256);

}  // namespace
