#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "rgbt/attributes.hpp"
#include "rgbt/errors.hpp"
#include "rgbt/metrics.hpp"
#include "rgbt/rng.hpp"

using namespace rgbt;

namespace {

BoxTrack boxes_at(const std::vector<std::pair<double, double>>& centers, double w = 30,
                  double h = 30) {
  BoxTrack t;
  for (const auto& [cx, cy] : centers) t.push_back(BoundingBox{cx - w / 2, cy - h / 2, w, h});
  return t;
}

std::vector<int> dense_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

}  // namespace

TEST_CASE("attribute names follow the canonical order") {
  CHECK(attribute_name(Attribute::kTB) == "TB");
  CHECK(attribute_name(Attribute::kTVS) == "TVS");
  CHECK(attribute_from_name("FM") == Attribute::kFM);
  CHECK(!attribute_from_name("XX").has_value());
  CHECK(attribute_is_derived(Attribute::kFM));
  CHECK(attribute_is_derived(Attribute::kSV));
  CHECK(attribute_is_derived(Attribute::kLR));
  CHECK(attribute_is_derived(Attribute::kTVS));
  CHECK(!attribute_is_derived(Attribute::kPO));
}

TEST_CASE("fast moving: static target never flags") {
  const BoxTrack gt = boxes_at({{50, 50}, {50, 50}, {50, 50}});
  const auto flags = derive_fm(gt, dense_indices(3));
  for (bool f : flags) CHECK(!f);
}

TEST_CASE("fast moving: strict 20 px boundary at adjacent frames") {
  const BoxTrack gt25 = boxes_at({{50, 50}, {75, 50}});
  CHECK(derive_fm(gt25, dense_indices(2))[1]);

  const BoxTrack gt20 = boxes_at({{50, 50}, {70, 50}});
  CHECK(!derive_fm(gt20, dense_indices(2))[1]);  // exactly 20 is not "larger than"
}

TEST_CASE("fast moving: sparse annotations normalize by the index gap") {
  // 250 px across a 10-frame gap is 25 px per frame
  const BoxTrack fast = boxes_at({{50, 50}, {300, 50}});
  const int sparse[] = {0, 10};
  CHECK(derive_fm(fast, sparse)[1]);

  // 200 px across a 10-frame gap is exactly 20 px per frame
  const BoxTrack edge = boxes_at({{50, 50}, {250, 50}});
  CHECK(!derive_fm(edge, sparse)[1]);
}

TEST_CASE("fast moving: single frame and absent chains") {
  const BoxTrack one = boxes_at({{50, 50}});
  const auto f1 = derive_fm(one, dense_indices(1));
  CHECK(f1.size() == 1);
  CHECK(!f1[0]);

  BoxTrack with_gap = boxes_at({{50, 50}, {300, 50}, {305, 50}});
  with_gap[1] = std::nullopt;  // teleport across an absence must not flag
  const auto flags = derive_fm(with_gap, dense_indices(3));
  CHECK(!flags[0]);
  CHECK(!flags[1]);
  CHECK(!flags[2]);
}

TEST_CASE("scale variation: constant size never flags") {
  BoxTrack gt;
  for (int i = 0; i < 5; ++i) gt.push_back(BoundingBox{0, 0, 20, 20});
  for (bool f : derive_sv(gt)) CHECK(!f);
}

TEST_CASE("scale variation: closed interval boundaries") {
  BoxTrack gt;
  gt.push_back(BoundingBox{0, 0, 10, 10});  // area 100
  gt.push_back(BoundingBox{0, 0, 25, 10});  // ratio 2.5 -> flagged
  gt.push_back(BoundingBox{0, 0, 20, 10});  // ratio exactly 2 -> not flagged
  gt.push_back(BoundingBox{0, 0, 5, 10});   // ratio exactly 0.5 -> not flagged
  gt.push_back(BoundingBox{0, 0, 4, 10});   // ratio 0.4 -> flagged
  const auto flags = derive_sv(gt);
  CHECK(!flags[0]);
  CHECK(flags[1]);
  CHECK(!flags[2]);
  CHECK(!flags[3]);
  CHECK(flags[4]);
}

TEST_CASE("scale variation: zero-area initial box is undefined") {
  BoxTrack gt;
  gt.push_back(BoundingBox{0, 0, 0, 0});
  gt.push_back(BoundingBox{0, 0, 10, 10});
  CHECK_THROWS_AS(derive_sv(gt), ValueError);
}

TEST_CASE("scale variation is invariant under uniform spatial scaling") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    BoxTrack gt;
    for (int i = 0; i < 6; ++i) {
      const double w = rng.uniform(5, 40), h = rng.uniform(5, 40);
      gt.push_back(BoundingBox{rng.uniform(0, 100), rng.uniform(0, 100), w, h});
    }
    const double s = rng.uniform(0.2, 5.0);
    BoxTrack scaled;
    for (const auto& b : gt) scaled.push_back(BoundingBox{b->x * s, b->y * s, b->w * s, b->h * s});
    CHECK(derive_sv(gt) == derive_sv(scaled));
  }
}

TEST_CASE("low resolution: strict 400 boundary") {
  BoxTrack gt;
  gt.push_back(BoundingBox{0, 0, 30, 30});  // 900
  gt.push_back(BoundingBox{0, 0, 19, 20});  // 380
  gt.push_back(BoundingBox{0, 0, 20, 20});  // exactly 400
  const auto flags = derive_lr(gt);
  CHECK(!flags[0]);
  CHECK(flags[1]);
  CHECK(!flags[2]);
}

TEST_CASE("thermal-visible separation: overlap boundary cases") {
  const BoundingBox a{0, 0, 10, 10};
  BoxTrack v = {a, a, a, a};
  BoxTrack t = {a,                              // identical -> false
                BoundingBox{50, 50, 10, 10},    // disjoint -> true
                BoundingBox{10, 0, 10, 10},     // touching edge to edge -> true
                std::nullopt};                  // missing modality -> skipped
  const auto flags = derive_tvs(v, t);
  CHECK(!flags[0]);
  CHECK(flags[1]);
  CHECK(flags[2]);
  CHECK(!flags[3]);
}

TEST_CASE("tvs agrees with the iou-zero oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const BoundingBox a{static_cast<double>(rng.uniform_int(0, 30)),
                        static_cast<double>(rng.uniform_int(0, 30)),
                        static_cast<double>(rng.uniform_int(1, 20)),
                        static_cast<double>(rng.uniform_int(1, 20))};
    const BoundingBox b{static_cast<double>(rng.uniform_int(0, 30)),
                        static_cast<double>(rng.uniform_int(0, 30)),
                        static_cast<double>(rng.uniform_int(1, 20)),
                        static_cast<double>(rng.uniform_int(1, 20))};
    const BoxTrack v = {a};
    const BoxTrack t = {b};
    CHECK(derive_tvs(v, t)[0] == (iou(a, b) == 0.0));
  }
}

TEST_CASE("derived attribute track unions into the sequence flags") {
  const BoxTrack v = boxes_at({{50, 50}, {300, 50}, {302, 52}});
  BoxTrack t = v;
  t[2] = BoundingBox{500, 500, 30, 30};  // separated at the last frame
  const int idx[] = {0, 1, 2};
  const AttributeTrack track = derived_attribute_track(v, t, idx);
  const AttributeSet seq = track.united();
  CHECK(seq.test(Attribute::kFM));   // 250 px jump at frame 1
  CHECK(seq.test(Attribute::kTVS));  // separation at frame 2
  CHECK(!seq.test(Attribute::kSV));
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    for (Attribute a : all_attributes()) {
      if (track.frames[i].test(a)) CHECK(seq.test(a));
    }
  }
}

TEST_CASE("derivations depend only on annotations") {
  // Re-deriving from the same tracks yields identical flags.
  const BoxTrack v = boxes_at({{10, 10}, {40, 40}, {70, 70}});
  const auto idx = dense_indices(3);
  CHECK(derive_fm(v, idx) == derive_fm(v, idx));
  CHECK(derive_sv(v) == derive_sv(v));
}
