#include "rgbt/tracking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rgbt/errors.hpp"
#include "rgbt/ops.hpp"

namespace rgbt {

namespace fs = std::filesystem;

// --------------------------------------------------------------------------
// Frame sources
// --------------------------------------------------------------------------

MemoryFrameSource::MemoryFrameSource(std::vector<Tensor> visible, std::vector<Tensor> thermal)
    : visible_(std::move(visible)), thermal_(std::move(thermal)) {
  if (visible_.size() != thermal_.size()) {
    throw ProtocolError("MemoryFrameSource: modality feature lists differ in length");
  }
}

Frame MemoryFrameSource::frame(int index) {
  return Frame{index, visible_[static_cast<std::size_t>(index)],
               thermal_[static_cast<std::size_t>(index)]};
}

DirectoryFrameSource::DirectoryFrameSource(fs::path sequence_dir, int frame_count)
    : dir_(std::move(sequence_dir)), frame_count_(frame_count) {
  if (!features_present(dir_)) {
    throw ProtocolError("no toy features under " + dir_.string() +
                        " (expected feat_rgb/ and feat_ir/)");
  }
}

bool DirectoryFrameSource::features_present(const fs::path& sequence_dir) {
  return fs::exists(sequence_dir / "feat_rgb") && fs::exists(sequence_dir / "feat_ir");
}

Frame DirectoryFrameSource::frame(int index) {
  const std::string stem = frame_stem(index) + ".tns";
  return Frame{index, read_tensor_file(dir_ / "feat_rgb" / stem),
               read_tensor_file(dir_ / "feat_ir" / stem)};
}

// --------------------------------------------------------------------------
// OpeResult
// --------------------------------------------------------------------------

double OpeResult::total_seconds() const {
  double ms = 0.0;
  for (double m : millis) ms += m;
  return ms / 1000.0;
}

double OpeResult::fps() const {
  const double secs = total_seconds();
  if (secs <= 0.0) return 0.0;
  return static_cast<double>(boxes.size()) / secs;
}

void OpeResult::write_csv(std::ostream& os) const {
  os.precision(17);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    os << i << ',' << boxes[i].x << ',' << boxes[i].y << ',' << boxes[i].w << ',' << boxes[i].h
       << ',' << confidences[i] << ',' << millis[i] << '\n';
  }
}

OpeResult OpeResult::read_csv(std::istream& is, std::string sequence_name) {
  OpeResult r;
  r.sequence = std::move(sequence_name);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string tok;
    double fields[7];
    for (int k = 0; k < 7; ++k) {
      if (!std::getline(ls, tok, ',')) {
        throw ParseError("result line " + std::to_string(lineno) + ": expected 7 fields");
      }
      try {
        fields[k] = std::stod(tok);
      } catch (const std::exception&) {
        throw ParseError("result line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (static_cast<std::size_t>(fields[0]) != r.boxes.size()) {
      throw ParseError("result line " + std::to_string(lineno) + ": frame indices must be 0,1,2,...");
    }
    r.boxes.push_back({fields[1], fields[2], fields[3], fields[4]});
    r.confidences.push_back(fields[5]);
    r.millis.push_back(fields[6]);
  }
  return r;
}

void OpeResult::write_csv_file(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
}

OpeResult OpeResult::read_csv_file(const fs::path& path, std::string sequence_name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return read_csv(in, std::move(sequence_name));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------
// One-pass driver
// --------------------------------------------------------------------------

OpeResult run_ope(Tracker& tracker, const SequenceRecord& record, FrameSource& frames) {
  if (record.gt_visible.empty() ||
      (!record.gt_visible[0].has_value() && !record.gt_thermal[0].has_value())) {
    throw ProtocolError(record.name + ": one-pass evaluation needs a frame-0 annotation");
  }
  const BoundingBox init =
      record.gt_visible[0] ? *record.gt_visible[0] : *record.gt_thermal[0];

  OpeResult result;
  result.sequence = record.name;
  const int n = record.frame_count;
  result.boxes.reserve(n);
  result.confidences.reserve(n);
  result.millis.reserve(n);

  using clock = std::chrono::steady_clock;
  for (int f = 0; f < n; ++f) {
    const auto t0 = clock::now();
    try {
      const Frame fr = frames.frame(f);
      const StepResult out = f == 0 ? tracker.initialize(fr, init) : tracker.step(fr);
      const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      result.boxes.push_back(out.box);
      result.confidences.push_back(out.confidence);
      result.millis.push_back(ms);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      while (static_cast<int>(result.boxes.size()) < n) {
        result.boxes.push_back(BoundingBox::empty_box());
        result.confidences.push_back(0.0);
        result.millis.push_back(0.0);
      }
      break;
    }
  }
  return result;
}

TrackMode lt_switch(TrackMode mode, double confidence, double theta_low, double theta_high) {
  if (!(theta_low < theta_high)) {
    throw ConfigError("lt_switch: theta_low must be below theta_high");
  }
  if (mode == TrackMode::kLocal && confidence < theta_low) return TrackMode::kGlobal;
  if (mode == TrackMode::kGlobal && confidence >= theta_high) return TrackMode::kLocal;
  return mode;
}

// --------------------------------------------------------------------------
// Correlation
// --------------------------------------------------------------------------

Tensor ncc_correlate(const Tensor& search, const Tensor& tmpl) {
  if (search.rank() != 3 || tmpl.rank() != 3 || search.extent(0) != tmpl.extent(0)) {
    throw ShapeError("ncc_correlate: search " + search.shape_string() + " and template " +
                     tmpl.shape_string() + " do not conform");
  }
  const int c = search.extent(0);
  const int sh = search.extent(1), sw = search.extent(2);
  const int th = tmpl.extent(1), tw = tmpl.extent(2);
  if (th > sh || tw > sw) {
    throw ShapeError("ncc_correlate: template larger than search region");
  }
  const std::int64_t n = static_cast<std::int64_t>(c) * th * tw;

  double tmpl_mean = 0.0;
  for (std::int64_t i = 0; i < tmpl.size(); ++i) tmpl_mean += tmpl[i];
  tmpl_mean /= static_cast<double>(n);
  double tmpl_norm2 = 0.0;
  for (std::int64_t i = 0; i < tmpl.size(); ++i) {
    const double d = tmpl[i] - tmpl_mean;
    tmpl_norm2 += d * d;
  }
  const double tmpl_norm = std::sqrt(tmpl_norm2);

  Tensor response({sh - th + 1, sw - tw + 1});
  if (tmpl_norm < 1e-12) return response;

  for (int oy = 0; oy + th <= sh; ++oy) {
    for (int ox = 0; ox + tw <= sw; ++ox) {
      double patch_sum = 0.0;
      for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < th; ++i)
          for (int j = 0; j < tw; ++j) patch_sum += search(ci, oy + i, ox + j);
      const double patch_mean = patch_sum / static_cast<double>(n);
      double dot = 0.0, patch_norm2 = 0.0;
      for (int ci = 0; ci < c; ++ci) {
        for (int i = 0; i < th; ++i) {
          for (int j = 0; j < tw; ++j) {
            const double sv = search(ci, oy + i, ox + j) - patch_mean;
            dot += sv * (tmpl(ci, i, j) - tmpl_mean);
            patch_norm2 += sv * sv;
          }
        }
      }
      response(oy, ox) =
          patch_norm2 < 1e-24 ? 0.0 : dot / (std::sqrt(patch_norm2) * tmpl_norm);
    }
  }
  return response;
}

GlobalSearchResult global_search(const Tensor& tmpl, const Tensor& features) {
  const Tensor response = ncc_correlate(features, tmpl);
  const std::int64_t best = argmax(response);
  GlobalSearchResult r;
  r.row = static_cast<int>(best / response.extent(1));
  r.col = static_cast<int>(best % response.extent(1));
  r.score = response[best];
  return r;
}

// --------------------------------------------------------------------------
// Reference toy tracker
// --------------------------------------------------------------------------

namespace {

Tensor crop3(const Tensor& x, int r0, int r1, int c0, int c1) {
  const int c = x.extent(0);
  Tensor out({c, r1 - r0, c1 - c0});
  for (int ci = 0; ci < c; ++ci)
    for (int i = r0; i < r1; ++i)
      for (int j = c0; j < c1; ++j) out(ci, i - r0, j - c0) = x(ci, i, j);
  return out;
}

Tensor crop2(const Tensor& x, int r0, int r1, int c0, int c1) {
  Tensor out({r1 - r0, c1 - c0});
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) out(i - r0, j - c0) = x(i, j);
  return out;
}

// Rescales both confidence maps by their shared peak magnitude, keeping the
// relative branch scale the gate relies on.
void normalize_shared_scale(Tensor& a, Tensor& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  for (std::int64_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(b[i]));
  if (m < 1e-12) return;
  a = scale(a, 1.0 / m);
  b = scale(b, 1.0 / m);
}

int clamp_int(int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); }

}  // namespace

HmftToyTracker::HmftToyTracker(ToyTrackerConfig cfg) : cfg_(cfg) {}

std::string HmftToyTracker::name() const {
  return "hmft-toy[" + cfg_.pipeline.describe() + (cfg_.long_term ? ",lt" : "") + "]";
}

StepResult HmftToyTracker::initialize(const Frame& first, const BoundingBox& init) {
  if (first.feat_visible.rank() != 3 || !first.feat_visible.same_shape(first.feat_thermal)) {
    throw ShapeError("toy tracker needs matching CxHxW features for both modalities");
  }
  channels_ = first.feat_visible.extent(0);
  map_h_ = first.feat_visible.extent(1);
  map_w_ = first.feat_visible.extent(2);
  box_w_ = init.w;
  box_h_ = init.h;

  const int radius = cfg_.template_radius;
  const int side = 2 * radius + 1;
  if (map_h_ < side || map_w_ < side) {
    throw ShapeError("feature map smaller than the tracking template");
  }
  center_row_ = clamp_int(
      static_cast<int>(std::floor(init.cy() / cfg_.feature_stride)), radius, map_h_ - 1 - radius);
  center_col_ = clamp_int(
      static_cast<int>(std::floor(init.cx() / cfg_.feature_stride)), radius, map_w_ - 1 - radius);

  tmpl_visible_ = crop3(first.feat_visible, center_row_ - radius, center_row_ + radius + 1,
                        center_col_ - radius, center_col_ + radius + 1);
  tmpl_thermal_ = crop3(first.feat_thermal, center_row_ - radius, center_row_ + radius + 1,
                        center_col_ - radius, center_col_ + radius + 1);

  dff_ = DffParams::seeded(channels_, channels_, cfg_.seed);
  mam_disc_ = MamParams::zero_sum_seeded(channels_, 2, cfg_.seed + 1);
  mam_comp_ = MamParams::zero_sum_seeded(2 * channels_, 2, cfg_.seed + 2, /*halves=*/2);
  adf_ = AdfParams::confidence_gate(cfg_.adf_gain);

  tmpl_fused_ = dff_fuse(tmpl_visible_, tmpl_thermal_, dff_).fused;
  tmpl_concat_ = concat_channels(tmpl_visible_, tmpl_thermal_);
  mode_ = TrackMode::kLocal;
  ring_size_ = ring_next_ = 0;
  push_confidence(1.0);
  return {init, 1.0};
}

void HmftToyTracker::push_confidence(double c) {
  confidence_ring_[static_cast<std::size_t>(ring_next_)] = c;
  ring_next_ = (ring_next_ + 1) % kConfidenceRing;
  ring_size_ = std::min(ring_size_ + 1, kConfidenceRing);
}

std::vector<double> HmftToyTracker::recent_confidences() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ring_size_));
  for (int k = ring_size_; k > 0; --k) {
    const int idx = (ring_next_ - k + kConfidenceRing) % kConfidenceRing;
    out.push_back(confidence_ring_[static_cast<std::size_t>(idx)]);
  }
  return out;
}

HmftToyTracker::Window HmftToyTracker::search_window(bool global) const {
  Window w;
  const int side = 2 * cfg_.template_radius + 1;
  if (global) {
    w.r0 = 0;
    w.r1 = map_h_;
    w.c0 = 0;
    w.c1 = map_w_;
    return w;
  }
  const int span_r = std::min(map_h_, std::max(side, 2 * cfg_.search_radius + 1));
  const int span_c = std::min(map_w_, std::max(side, 2 * cfg_.search_radius + 1));
  w.r0 = clamp_int(center_row_ - span_r / 2, 0, map_h_ - span_r);
  w.c0 = clamp_int(center_col_ - span_c / 2, 0, map_w_ - span_c);
  w.r1 = w.r0 + span_r;
  w.c1 = w.c0 + span_c;
  return w;
}

Tensor HmftToyTracker::branch_response(const Tensor& crop_v, const Tensor& crop_t) const {
  switch (cfg_.pipeline.combine) {
    case ResponseCombine::kSingleModality: {
      const bool vis = cfg_.pipeline.modality == Modality::kVisible;
      return ncc_correlate(vis ? crop_v : crop_t, vis ? tmpl_visible_ : tmpl_thermal_);
    }
    case ResponseCombine::kDiscriminativeOnly: {
      return ncc_correlate(dff_fuse(crop_v, crop_t, dff_).fused, tmpl_fused_);
    }
    case ResponseCombine::kComplementaryOnly: {
      return ncc_correlate(concat_channels(crop_v, crop_t), tmpl_concat_);
    }
    case ResponseCombine::kAverage:
    case ResponseCombine::kAdaptive: {
      const Tensor fused = dff_fuse(crop_v, crop_t, dff_).fused;
      const Tensor cat = concat_channels(crop_v, crop_t);
      const Tensor resp_d = ncc_correlate(fused, tmpl_fused_);
      const Tensor resp_c = ncc_correlate(cat, tmpl_concat_);
      if (cfg_.pipeline.combine == ResponseCombine::kAverage) {
        return scale(add(resp_d, resp_c), 0.5);
      }
      // Adaptive: attention confidences on the fused/concatenated inputs,
      // center-cropped to the response extent and jointly rescaled before the
      // gate.
      const int off_r = (fused.extent(1) - resp_d.extent(0)) / 2;
      const int off_c = (fused.extent(2) - resp_d.extent(1)) / 2;
      Tensor conf_d = crop2(mam_confidence(fused, mam_disc_), off_r, off_r + resp_d.extent(0),
                            off_c, off_c + resp_d.extent(1));
      Tensor conf_c = crop2(mam_confidence(cat, mam_comp_), off_r, off_r + resp_d.extent(0),
                            off_c, off_c + resp_d.extent(1));
      normalize_shared_scale(conf_d, conf_c);
      return adf_fuse(resp_d, resp_c, conf_d, conf_c, adf_).response;
    }
  }
  throw ConfigError("unknown response combination");
}

StepResult HmftToyTracker::step(const Frame& frame) {
  if (frame.feat_visible.rank() != 3 || frame.feat_visible.extent(0) != channels_ ||
      frame.feat_visible.extent(1) != map_h_ || frame.feat_visible.extent(2) != map_w_ ||
      !frame.feat_visible.same_shape(frame.feat_thermal)) {
    throw ShapeError("frame features do not match the template channel/map layout");
  }
  const bool global = cfg_.long_term && mode_ == TrackMode::kGlobal;
  const Window w = search_window(global);
  const Tensor crop_v = crop3(frame.feat_visible, w.r0, w.r1, w.c0, w.c1);
  const Tensor crop_t = crop3(frame.feat_thermal, w.r0, w.r1, w.c0, w.c1);

  const Tensor response = branch_response(crop_v, crop_t);
  const std::int64_t best = argmax(response);
  const int resp_w = response.extent(1);
  const int peak_row = static_cast<int>(best / resp_w);
  const int peak_col = static_cast<int>(best % resp_w);
  const double peak = response[best];

  center_row_ = w.r0 + peak_row + cfg_.template_radius;
  center_col_ = w.c0 + peak_col + cfg_.template_radius;

  // Peak response clipped to [0,1]; anti-correlation carries no confidence.
  const double confidence = std::clamp(peak, 0.0, 1.0);
  push_confidence(confidence);

  const double cx = (center_col_ + 0.5) * cfg_.feature_stride;
  const double cy = (center_row_ + 0.5) * cfg_.feature_stride;
  const BoundingBox box{cx - box_w_ / 2.0, cy - box_h_ / 2.0, box_w_, box_h_};

  if (cfg_.long_term) {
    mode_ = lt_switch(mode_, confidence, cfg_.theta_low, cfg_.theta_high);
  }
  return {box, confidence};
}

// --------------------------------------------------------------------------
// Baseline trackers
// --------------------------------------------------------------------------

EchoTracker::EchoTracker(const SequenceRecord& record) : record_(record) {}

StepResult EchoTracker::initialize(const Frame&, const BoundingBox& init) {
  last_ = init;
  return {init, 1.0};
}

StepResult EchoTracker::step(const Frame& frame) {
  if (frame.index % record_.interval == 0) {
    const std::size_t slot = static_cast<std::size_t>(frame.index / record_.interval);
    if (slot < record_.gt_visible.size()) {
      const auto& v = record_.gt_visible[slot];
      const auto& t = record_.gt_thermal[slot];
      if (v) {
        last_ = *v;
      } else if (t) {
        last_ = *t;
      } else {
        last_ = BoundingBox::empty_box();
      }
    }
  }
  return {last_, last_.is_empty() ? 0.0 : 1.0};
}

StepResult StaticTracker::initialize(const Frame&, const BoundingBox& init) {
  init_ = init;
  return {init, 1.0};
}

StepResult StaticTracker::step(const Frame&) { return {init_, 1.0}; }

StepResult EmptyBoxTracker::initialize(const Frame&, const BoundingBox&) {
  return {BoundingBox::empty_box(), 0.0};
}

StepResult EmptyBoxTracker::step(const Frame&) { return {BoundingBox::empty_box(), 0.0}; }

}  // namespace rgbt
