#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rgbt/errors.hpp"
#include "rgbt/metrics.hpp"
#include "rgbt/rng.hpp"

using namespace rgbt;

namespace {

BoundingBox random_int_box(Rng& rng, int max_side) {
  return BoundingBox{static_cast<double>(rng.uniform_int(0, 40)),
                     static_cast<double>(rng.uniform_int(0, 40)),
                     static_cast<double>(rng.uniform_int(1, max_side)),
                     static_cast<double>(rng.uniform_int(1, max_side))};
}

FrameMask random_mask(Rng& rng, int w, int h) {
  FrameMask m(w, h);
  // a rectangle plus salt noise
  const int x0 = rng.uniform_int(0, w - 1), y0 = rng.uniform_int(0, h - 1);
  const int bw = rng.uniform_int(1, w - x0), bh = rng.uniform_int(1, h - y0);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(x, y, true);
  const int flips = rng.uniform_int(0, w * h / 8);
  for (int k = 0; k < flips; ++k) {
    m.bits[static_cast<std::size_t>(rng.uniform_int(0, w * h - 1))] ^= 1;
  }
  return m;
}

}  // namespace

TEST_CASE("iou: identity, hand value, disjoint") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {5, 5, 10, 10}) == doctest::Approx(25.0 / 175.0).epsilon(1e-12));
  CHECK(iou(a, {20, 0, 5, 5}) == 0.0);
  CHECK(iou(a, {10, 10, 5, 5}) == 0.0);  // corner touch has zero area
  CHECK(iou(BoundingBox::empty_box(), a) == 0.0);
  CHECK(iou(BoundingBox::empty_box(), BoundingBox::empty_box()) == 0.0);
}

TEST_CASE("iou matches the pixel-counting oracle on random integer boxes") {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const BoundingBox a = random_int_box(rng, 50);
    const BoundingBox b = random_int_box(rng, 50);
    const double fast = iou(a, b);
    CHECK(fast == doctest::Approx(oracle::iou_pixel_counting(a, b)).epsilon(1e-9));
    CHECK(fast == iou(b, a));
    CHECK(fast >= 0.0);
    CHECK(fast <= 1.0);
  }
}

TEST_CASE("center_distance: identity, hand value, failure sentinel") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(center_distance(a, a) == 0.0);
  CHECK(center_distance(a, {5, 5, 10, 10}) == doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
  CHECK(std::isinf(center_distance(BoundingBox::empty_box(), a)));
  CHECK(center_distance(BoundingBox::empty_box(), a) > 1e300);
}

namespace {

struct ToySequence {
  std::vector<BoundingBox> pred;
  BoxTrack gt_v, gt_t;
  std::vector<bool> valid;
};

ToySequence make_toy(int frames, Rng& rng) {
  ToySequence s;
  for (int i = 0; i < frames; ++i) {
    const BoundingBox gt = random_int_box(rng, 30);
    s.gt_v.push_back(gt);
    BoundingBox gt_t = gt;
    gt_t.x += 3;
    s.gt_t.push_back(gt_t);
    BoundingBox p = gt;
    p.x += rng.uniform_int(0, 12);
    s.pred.push_back(p);
    s.valid.push_back(true);
  }
  return s;
}

}  // namespace

TEST_CASE("msr: perfect tracker scores exactly one") {
  Rng rng(103);
  ToySequence s = make_toy(8, rng);
  s.pred.clear();
  for (const auto& b : s.gt_v) s.pred.push_back(*b);
  const MsrResult r = msr(s.pred, s.gt_v, s.gt_t, s.valid);
  CHECK(r.value == 1.0);
}

TEST_CASE("msr: empty-box tracker scores exactly zero") {
  Rng rng(107);
  ToySequence s = make_toy(8, rng);
  s.pred.assign(s.pred.size(), BoundingBox::empty_box());
  const MsrResult r = msr(s.pred, s.gt_v, s.gt_t, s.valid);
  CHECK(r.value == 0.0);
  CHECK(r.curve.rates[0] == 0.0);  // strict inequality at threshold zero
}

TEST_CASE("msr two-frame toy matches threshold enumeration") {
  // Per-frame best overlaps (1.0, 0.0): the zero-overlap frame never counts,
  // so every sampled rate is 0.5.
  const BoundingBox hit{0, 0, 10, 10};
  const std::vector<BoundingBox> pred = {hit, {50, 50, 10, 10}};
  const BoxTrack gt = {hit, BoundingBox{0, 0, 10, 10}};
  const std::vector<bool> valid = {true, true};
  const MsrResult r = msr(pred, gt, gt, valid);
  const std::vector<double> overlaps = {1.0, 0.0};
  CHECK(r.value == doctest::Approx(oracle::success_auc_enumerated(overlaps)).epsilon(1e-15));
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("msr is invariant to consistent frame reordering") {
  Rng rng(109);
  ToySequence s = make_toy(10, rng);
  const double base = msr(s.pred, s.gt_v, s.gt_t, s.valid).value;
  std::vector<int> perm(10);
  for (int i = 0; i < 10; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
  ToySequence q;
  for (int i : perm) {
    q.pred.push_back(s.pred[i]);
    q.gt_v.push_back(s.gt_v[i]);
    q.gt_t.push_back(s.gt_t[i]);
    q.valid.push_back(s.valid[i]);
  }
  CHECK(msr(q.pred, q.gt_v, q.gt_t, q.valid).value == base);
}

TEST_CASE("msr with identical modality tracks degenerates to single-modality AUC") {
  Rng rng(113);
  ToySequence s = make_toy(12, rng);
  const MsrResult dual = msr(s.pred, s.gt_v, s.gt_v, s.valid);
  std::vector<double> overlaps;
  for (std::size_t i = 0; i < s.pred.size(); ++i) overlaps.push_back(iou(s.pred[i], *s.gt_v[i]));
  CHECK(dual.value == doctest::Approx(oracle::success_auc_enumerated(overlaps)).epsilon(1e-15));
}

TEST_CASE("msr rejects misaligned tracks") {
  Rng rng(127);
  ToySequence s = make_toy(4, rng);
  s.gt_t.pop_back();
  CHECK_THROWS_AS(msr(s.pred, s.gt_v, s.gt_t, s.valid), ProtocolError);
}

TEST_CASE("success curves are nonincreasing in the threshold") {
  Rng rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> overlaps;
    const int n = rng.uniform_int(1, 40);
    for (int i = 0; i < n; ++i) overlaps.push_back(rng.uniform());
    const SuccessCurve c = success_curve(overlaps);
    for (int k = 1; k < kCurveSamples; ++k) CHECK(c.rates[k] <= c.rates[k - 1]);
  }
}

TEST_CASE("mpr: perfect, strict threshold, fractional") {
  Rng rng(137);
  ToySequence s = make_toy(8, rng);

  std::vector<BoundingBox> echo;
  for (const auto& b : s.gt_v) echo.push_back(*b);
  CHECK(mpr(echo, s.gt_v, s.gt_t, s.valid) == 1.0);

  // displace every prediction exactly 21 px from both ground truths
  BoxTrack gt;
  std::vector<BoundingBox> pred;
  std::vector<bool> valid;
  for (int i = 0; i < 6; ++i) {
    const BoundingBox g{10.0 * i, 5.0, 8, 8};
    gt.push_back(g);
    BoundingBox p = g;
    p.y += 21.0;
    pred.push_back(p);
    valid.push_back(true);
  }
  CHECK(mpr(pred, gt, gt, valid, 20.0) == 0.0);
  CHECK(mpr(pred, gt, gt, valid, 21.0) == 1.0);  // inclusive comparison

  // half the frames inside tau
  for (int i = 0; i < 3; ++i) pred[static_cast<std::size_t>(i)] = *gt[static_cast<std::size_t>(i)];
  CHECK(mpr(pred, gt, gt, valid, 20.0) == 0.5);
}

TEST_CASE("mpr is nondecreasing in tau") {
  Rng rng(139);
  ToySequence s = make_toy(15, rng);
  double prev = -1.0;
  for (double tau = 2.0; tau <= 42.0; tau += 4.0) {
    const double v = mpr(s.pred, s.gt_v, s.gt_t, s.valid, tau);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("mpr takes the more favorable modality") {
  const BoundingBox g{0, 0, 10, 10};
  BoundingBox far = g;
  far.x += 100;
  const BoxTrack gt_v = {far};  // visible annotation far away
  const BoxTrack gt_t = {g};    // thermal annotation matches
  const std::vector<BoundingBox> pred = {g};
  const std::vector<bool> valid = {true};
  CHECK(mpr(pred, gt_v, gt_t, valid) == 1.0);
}

TEST_CASE("jaccard: identity, half cover, disjoint, empty conventions") {
  FrameMask g(8, 8);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) g.set(x, y, true);

  const FrameMask masks_g[] = {g};
  const FrameMask masks_same[] = {g};
  CHECK(jaccard(masks_same, masks_g) == 1.0);

  FrameMask half(8, 8);  // covers exactly half of g's 16 pixels, nothing else
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 4; ++x) half.set(x, y, true);
  CHECK(frame_jaccard(half, g) == 0.5);

  FrameMask other(8, 8);
  other.set(0, 0, true);
  CHECK(frame_jaccard(other, g) == 0.0);

  CHECK(frame_jaccard(FrameMask(8, 8), FrameMask(8, 8)) == 1.0);
  CHECK(frame_jaccard(FrameMask(8, 8), g) == 0.0);
}

TEST_CASE("jaccard equals the set oracle on random masks") {
  Rng rng(149);
  for (int trial = 0; trial < 200; ++trial) {
    const FrameMask a = random_mask(rng, 12, 9);
    const FrameMask b = random_mask(rng, 12, 9);
    CHECK(frame_jaccard(a, b) == oracle::jaccard_sets(a, b));
  }
}

TEST_CASE("boundary_mask: interior erodes, border survives") {
  FrameMask full(4, 4);
  for (auto& b : full.bits) b = 1;
  const FrameMask edge = boundary_mask(full);
  CHECK(edge.count() == 12);  // 16 minus the 2x2 interior
  CHECK(!edge.at(1, 1));
  CHECK(edge.at(0, 0));
}

TEST_CASE("f_score: identity, far boundaries, one-pixel shift") {
  FrameMask a(32, 32);
  for (int y = 4; y < 14; ++y)
    for (int x = 4; x < 14; ++x) a.set(x, y, true);
  CHECK(frame_f_score(a, a, 2.0) == 1.0);

  FrameMask far(32, 32);
  for (int y = 24; y < 30; ++y)
    for (int x = 24; x < 30; ++x) far.set(x, y, true);
  CHECK(frame_f_score(a, far, 2.0) == 0.0);

  FrameMask shifted(32, 32);  // the same 10x10 square, one pixel right
  for (int y = 4; y < 14; ++y)
    for (int x = 5; x < 15; ++x) shifted.set(x, y, true);
  CHECK(frame_f_score(a, shifted, 2.0) == 1.0);

  CHECK(frame_f_score(FrameMask(32, 32), FrameMask(32, 32), 2.0) == 1.0);
  CHECK(frame_f_score(FrameMask(32, 32), a, 2.0) == 0.0);
}

TEST_CASE("f_score equals the all-pairs oracle on random masks") {
  Rng rng(151);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = rng.uniform_int(4, 32), h = rng.uniform_int(4, 32);
    const FrameMask a = random_mask(rng, w, h);
    const FrameMask b = random_mask(rng, w, h);
    const double tol = rng.uniform(0.5, 4.0);
    CHECK(frame_f_score(a, b, tol) == oracle::f_score_all_pairs(a, b, tol));
  }
}

TEST_CASE("squared_distance_transform returns exact integer distances") {
  FrameMask m(5, 5);
  m.set(2, 2, true);
  const auto d = squared_distance_transform(m);
  CHECK(d[2 * 5 + 2] == 0.0);
  CHECK(d[0] == 8.0);       // (2,2) -> (0,0)
  CHECK(d[2 * 5 + 0] == 4.0);
  CHECK(d[1 * 5 + 1] == 2.0);
}

TEST_CASE("default boundary tolerance follows the image diagonal") {
  CHECK(default_boundary_tolerance(300, 400) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("rasterize_box covers exactly w*h cells for integer boxes") {
  const FrameMask m = rasterize_box({3, 4, 5, 6}, 20, 20);
  CHECK(m.count() == 30);
  CHECK(m.at(3, 4));
  CHECK(m.at(7, 9));
  CHECK(!m.at(8, 4));
  CHECK(rasterize_box(BoundingBox::empty_box(), 8, 8).count() == 0);
}
