#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rgbt/errors.hpp"
#include "rgbt/eval.hpp"
#include "rgbt/ops.hpp"
#include "rgbt/rng.hpp"
#include "rgbt/synthetic.hpp"
#include "rgbt/tracking.hpp"

using namespace rgbt;

namespace {

SyntheticSpec small_moving_spec(const std::string& name, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.name = name;
  spec.seed = seed;
  spec.frame_count = 40;
  spec.image_width = 320;
  spec.image_height = 240;
  spec.waypoints = {{0, 80, 80}, {39, 240, 180}};
  return spec;
}

SequenceEval eval_of(const SequenceRecord& rec, const OpeResult& result) {
  return evaluate_sequence(rec, result, EvalConfig{});
}

}  // namespace

TEST_CASE("run_ope: the echo tracker is a perfect tracker") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("echo", 1));
  EchoTracker tracker(seq.record);
  EmptyFrameSource frames(seq.record.frame_count);
  const OpeResult result = run_ope(tracker, seq.record, frames);
  const SequenceEval ev = eval_of(seq.record, result);
  CHECK(ev.msr == 1.0);
  CHECK(ev.mpr == 1.0);
}

TEST_CASE("run_ope: the empty-box tracker scores zero") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("empty", 2));
  EmptyBoxTracker tracker;
  EmptyFrameSource frames(seq.record.frame_count);
  const SequenceEval ev = eval_of(seq.record, run_ope(tracker, seq.record, frames));
  CHECK(ev.msr == 0.0);
  CHECK(ev.mpr == 0.0);
}

TEST_CASE("run_ope: a stuck tracker scores below the echo tracker") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("stuck", 3));
  EmptyFrameSource frames(seq.record.frame_count);
  StaticTracker stuck;
  const double stuck_msr = eval_of(seq.record, run_ope(stuck, seq.record, frames)).msr;
  EchoTracker echo(seq.record);
  const double echo_msr = eval_of(seq.record, run_ope(echo, seq.record, frames)).msr;
  CHECK(stuck_msr < echo_msr);
  CHECK(echo_msr == 1.0);
}

namespace {

class ThrowAtTracker : public Tracker {
 public:
  explicit ThrowAtTracker(int frame) : throw_frame_(frame) {}
  StepResult initialize(const Frame&, const BoundingBox& init) override { return {init, 1.0}; }
  StepResult step(const Frame& frame) override {
    if (frame.index >= throw_frame_) throw Error("synthetic tracker failure");
    return {BoundingBox{0, 0, 5, 5}, 0.5};
  }
  std::string name() const override { return "throw-at"; }

 private:
  int throw_frame_;
};

class ProbeSource : public FrameSource {
 public:
  ProbeSource(int count, std::vector<std::string>& log) : count_(count), log_(log) {}
  int count() const override { return count_; }
  Frame frame(int index) override {
    log_.push_back("fetch " + std::to_string(index));
    return Frame{index, Tensor(), Tensor()};
  }

 private:
  int count_;
  std::vector<std::string>& log_;
};

class ProbeTracker : public Tracker {
 public:
  explicit ProbeTracker(std::vector<std::string>& log) : log_(log) {}
  StepResult initialize(const Frame& f, const BoundingBox& init) override {
    log_.push_back("emit " + std::to_string(f.index));
    return {init, 1.0};
  }
  StepResult step(const Frame& f) override {
    log_.push_back("emit " + std::to_string(f.index));
    return {BoundingBox{0, 0, 1, 1}, 0.5};
  }
  std::string name() const override { return "probe"; }

 private:
  std::vector<std::string>& log_;
};

}  // namespace

TEST_CASE("run_ope: a tracker failure aborts with empty boxes for the tail") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("fail", 4));
  ThrowAtTracker tracker(5);
  EmptyFrameSource frames(seq.record.frame_count);
  const OpeResult result = run_ope(tracker, seq.record, frames);
  CHECK(result.aborted);
  CHECK(result.abort_reason == "synthetic tracker failure");
  CHECK(static_cast<int>(result.boxes.size()) == seq.record.frame_count);
  for (std::size_t i = 5; i < result.boxes.size(); ++i) {
    CHECK(result.boxes[i].is_empty());
    CHECK(result.confidences[i] == 0.0);
  }
}

TEST_CASE("run_ope: frames are fetched in order and only after the previous emit") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("probe", 5));
  std::vector<std::string> log;
  ProbeSource frames(seq.record.frame_count, log);
  ProbeTracker tracker(log);
  run_ope(tracker, seq.record, frames);
  REQUIRE(log.size() == 2 * static_cast<std::size_t>(seq.record.frame_count));
  for (int f = 0; f < seq.record.frame_count; ++f) {
    CHECK(log[2 * f] == "fetch " + std::to_string(f));
    CHECK(log[2 * f + 1] == "emit " + std::to_string(f));
  }
}

TEST_CASE("run_ope requires a frame-0 annotation") {
  SyntheticSpec spec = small_moving_spec("noinit", 6);
  spec.with_features = false;
  SyntheticSequence seq = generate_synthetic(spec);
  seq.record.gt_visible[0] = std::nullopt;
  seq.record.gt_thermal[0] = std::nullopt;
  EchoTracker tracker(seq.record);
  EmptyFrameSource frames(seq.record.frame_count);
  CHECK_THROWS_AS(run_ope(tracker, seq.record, frames), ProtocolError);
}

TEST_CASE("lt_switch: hysteresis transitions") {
  CHECK(lt_switch(TrackMode::kLocal, 0.8, 0.3, 0.6) == TrackMode::kLocal);
  CHECK(lt_switch(TrackMode::kLocal, 0.29, 0.3, 0.6) == TrackMode::kGlobal);
  CHECK(lt_switch(TrackMode::kGlobal, 0.59, 0.3, 0.6) == TrackMode::kGlobal);
  CHECK(lt_switch(TrackMode::kGlobal, 0.6, 0.3, 0.6) == TrackMode::kLocal);
  // dead band keeps the mode
  CHECK(lt_switch(TrackMode::kLocal, 0.45, 0.3, 0.6) == TrackMode::kLocal);
  CHECK(lt_switch(TrackMode::kGlobal, 0.45, 0.3, 0.6) == TrackMode::kGlobal);
  CHECK_THROWS_AS(lt_switch(TrackMode::kLocal, 0.5, 0.6, 0.3), ConfigError);
  CHECK_THROWS_AS(lt_switch(TrackMode::kLocal, 0.5, 0.5, 0.5), ConfigError);
}

TEST_CASE("lt_switch: a scripted dip produces exactly one global episode") {
  const double confs[] = {0.9, 0.8, 0.2, 0.25, 0.4, 0.7, 0.9, 0.5, 0.8};
  TrackMode mode = TrackMode::kLocal;
  int episodes = 0;
  for (double c : confs) {
    const TrackMode next = lt_switch(mode, c, 0.3, 0.6);
    if (mode == TrackMode::kLocal && next == TrackMode::kGlobal) ++episodes;
    mode = next;
  }
  CHECK(episodes == 1);
  CHECK(mode == TrackMode::kLocal);
}

TEST_CASE("ncc_correlate: planted template yields a unit peak at its location") {
  Rng rng(9);
  const Tensor search = Tensor::uniform({4, 10, 12}, rng, -1, 1);
  Tensor tmpl({4, 3, 3});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) tmpl(c, i, j) = search(c, 5 + i, 7 + j);
  const Tensor response = ncc_correlate(search, tmpl);
  const std::int64_t best = argmax(response);
  CHECK(best / response.extent(1) == 5);
  CHECK(best % response.extent(1) == 7);
  CHECK(response[best] == doctest::Approx(1.0).epsilon(1e-12));
  for (std::int64_t i = 0; i < response.size(); ++i) {
    CHECK(response[i] <= 1.0 + 1e-12);
    CHECK(response[i] >= -1.0 - 1e-12);
  }
}

TEST_CASE("ncc_correlate guards degenerate variance") {
  const Tensor flat = Tensor::full({2, 6, 6}, 3.0);
  const Tensor tmpl = Tensor::full({2, 3, 3}, 3.0);
  const Tensor response = ncc_correlate(flat, tmpl);
  for (std::int64_t i = 0; i < response.size(); ++i) CHECK(response[i] == 0.0);
}

TEST_CASE("global_search: recovery, absence and single-peak consistency") {
  Rng rng(13);
  // a distinctive template placed far from the previous location
  Tensor features = Tensor::uniform({3, 14, 18}, rng, -0.05, 0.05);
  Tensor tmpl({3, 3, 3});
  Rng trng(14);
  for (std::int64_t i = 0; i < tmpl.size(); ++i) tmpl[i] = trng.uniform(-1, 1);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) features(c, 10 + i, 13 + j) += tmpl(c, i, j);
  const GlobalSearchResult hit = global_search(tmpl, features);
  CHECK(hit.row == 10);
  CHECK(hit.col == 13);
  CHECK(hit.score > 0.9);

  // absence: nothing correlates strongly
  const Tensor noise = Tensor::uniform({3, 14, 18}, rng, -0.05, 0.05);
  const GlobalSearchResult miss = global_search(tmpl, noise);
  CHECK(miss.score < 0.6);

  // single peak: restricting to a window around the peak finds the same cell
  Tensor window({3, 7, 7});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) window(c, i, j) = features(c, 7 + i, 10 + j);
  const GlobalSearchResult local = global_search(tmpl, window);
  CHECK(local.row + 7 == hit.row);
  CHECK(local.col + 10 == hit.col);
}

TEST_CASE("toy tracker follows a clean synthetic target within one cell") {
  const SyntheticSpec spec = small_moving_spec("clean_track", 21);
  const SyntheticSequence seq = generate_synthetic(spec);
  ToyTrackerConfig cfg;
  cfg.pipeline = ablation_config({true, true, true});
  HmftToyTracker tracker(cfg);
  MemoryFrameSource frames(seq.features_visible, seq.features_thermal);
  const OpeResult result = run_ope(tracker, seq.record, frames);
  for (int slot = 0; slot < seq.record.annotated_count(); ++slot) {
    const int f = slot * seq.record.interval;
    const BoundingBox gt = *seq.record.gt_visible[static_cast<std::size_t>(slot)];
    const double dist = center_distance(result.boxes[static_cast<std::size_t>(f)], gt);
    CHECK(dist <= cfg.feature_stride * std::sqrt(2.0) + 1e-9);
    CHECK(result.confidences[static_cast<std::size_t>(f)] > 0.6);
  }
}

TEST_CASE("identical modalities with symmetric heads collapse the branches") {
  Rng rng(23);
  const Tensor feat = Tensor::uniform({4, 6, 6}, rng, -1, 1);
  DffParams p = DffParams::seeded(4, 4, 31);
  p.w_thermal = p.w_visible;
  p.b_thermal = p.b_visible;
  const Tensor fused = dff_fuse(feat, feat, p).fused;
  for (std::int64_t i = 0; i < feat.size(); ++i) {
    CHECK(fused[i] == doctest::Approx(feat[i]).epsilon(1e-14));
  }
  // duplicated channels leave the normalized correlation unchanged
  Tensor tmpl({4, 3, 3});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) tmpl(c, i, j) = feat(c, 2 + i, 2 + j);
  const Tensor r_single = ncc_correlate(feat, tmpl);
  const Tensor r_concat = ncc_correlate(concat_channels(feat, feat), concat_channels(tmpl, tmpl));
  for (std::int64_t i = 0; i < r_single.size(); ++i) {
    CHECK(r_concat[i] == doctest::Approx(r_single[i]).epsilon(1e-12));
  }
}

TEST_CASE("saturated channel weights ignore a zeroed thermal stream") {
  Rng rng(29);
  const Tensor visible = Tensor::uniform({2, 5, 5}, rng, -1, 1);
  DffParams p;
  p.w_global = Tensor::zeros({1, 2});
  p.b_global = Tensor::zeros({1});
  p.w_visible = Tensor::zeros({2, 1});
  p.b_visible = Tensor::vector({1000.0, 1000.0});
  p.w_thermal = Tensor::zeros({2, 1});
  p.b_thermal = Tensor::zeros({2});
  const Tensor fused = dff_fuse(visible, Tensor::zeros({2, 5, 5}), p).fused;
  CHECK(fused == visible);
}

TEST_CASE("with equal branch responses the adaptive box equals the single-branch box") {
  // Identical modalities and symmetric weight heads make R_d == R_c, so the
  // fused response must select the same cell as either branch alone.
  SyntheticSpec spec = small_moving_spec("equal_branches", 33);
  SyntheticSequence seq = generate_synthetic(spec);
  seq.features_thermal = seq.features_visible;

  ToyTrackerConfig adaptive;
  adaptive.pipeline = ablation_config({true, true, true});
  adaptive.seed = 7;
  ToyTrackerConfig single;
  single.pipeline = ablation_config({false, true, false});
  single.seed = 7;

  MemoryFrameSource f1(seq.features_visible, seq.features_thermal);
  MemoryFrameSource f2(seq.features_visible, seq.features_thermal);
  HmftToyTracker t_adaptive(adaptive);
  HmftToyTracker t_single(single);
  const OpeResult r_adaptive = run_ope(t_adaptive, seq.record, f1);
  const OpeResult r_single = run_ope(t_single, seq.record, f2);
  REQUIRE(r_adaptive.boxes.size() == r_single.boxes.size());
  for (std::size_t i = 0; i < r_adaptive.boxes.size(); ++i) {
    CHECK(r_adaptive.boxes[i] == r_single.boxes[i]);
  }
}

TEST_CASE("the long-term switcher recovers a re-entering target") {
  SyntheticSpec spec;
  spec.name = "ov";
  spec.seed = 55;
  spec.frame_count = 100;
  spec.waypoints = {{0, 110, 100}, {29, 130, 115}, {70, 430, 310}, {99, 400, 290}};
  spec.absent_windows = {{30, 70}};
  const SyntheticSequence seq = generate_synthetic(spec);
  REQUIRE(seq.record.subset == Subset::kLongTerm);

  ToyTrackerConfig base;
  base.pipeline = ablation_config({true, true, true});
  base.seed = 7;
  ToyTrackerConfig with_lt = base;
  with_lt.long_term = true;

  MemoryFrameSource f1(seq.features_visible, seq.features_thermal);
  MemoryFrameSource f2(seq.features_visible, seq.features_thermal);
  HmftToyTracker switched(with_lt);
  HmftToyTracker plain(base);
  const double msr_lt = eval_of(seq.record, run_ope(switched, seq.record, f1)).msr;
  const double msr_st = eval_of(seq.record, run_ope(plain, seq.record, f2)).msr;
  CHECK(msr_lt > msr_st);
}

TEST_CASE("ope results round trip through their csv form") {
  Rng rng(61);
  OpeResult r;
  r.sequence = "csv";
  for (int i = 0; i < 12; ++i) {
    r.boxes.push_back(BoundingBox{rng.uniform(-5, 100), rng.uniform(-5, 100),
                                  rng.uniform(0, 40), rng.uniform(0, 40)});
    r.confidences.push_back(rng.uniform());
    r.millis.push_back(rng.uniform(0, 10));
  }
  std::stringstream ss;
  r.write_csv(ss);
  const OpeResult parsed = OpeResult::read_csv(ss, "csv");
  CHECK(parsed.boxes == r.boxes);
  CHECK(parsed.confidences == r.confidences);
  CHECK(parsed.millis == r.millis);
}

TEST_CASE("ope csv parsing rejects malformed rows") {
  std::stringstream bad("0,1,2,3\n");
  CHECK_THROWS_AS(OpeResult::read_csv(bad, "x"), ParseError);
  std::stringstream wrong_index("5,1,2,3,4,0.5,1.0\n");
  CHECK_THROWS_AS(OpeResult::read_csv(wrong_index, "x"), ParseError);
}

TEST_CASE("the tracker keeps a bounded ring of recent confidences in [0,1]") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("ring", 77));
  ToyTrackerConfig cfg;
  cfg.pipeline = ablation_config({true, true, false});
  HmftToyTracker tracker(cfg);
  MemoryFrameSource frames(seq.features_visible, seq.features_thermal);
  run_ope(tracker, seq.record, frames);
  const std::vector<double> recent = tracker.recent_confidences();
  CHECK(recent.size() == 8);
  for (double c : recent) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("wall time is recorded per frame") {
  const SyntheticSequence seq = generate_synthetic(small_moving_spec("time", 71));
  EchoTracker tracker(seq.record);
  EmptyFrameSource frames(seq.record.frame_count);
  const OpeResult result = run_ope(tracker, seq.record, frames);
  CHECK(result.millis.size() == result.boxes.size());
  CHECK(result.total_seconds() >= 0.0);
  CHECK(result.fps() >= 0.0);
}
