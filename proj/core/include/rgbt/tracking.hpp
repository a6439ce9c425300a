#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgbt/dataset.hpp"
#include "rgbt/fusion.hpp"
#include "rgbt/metrics.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

/// One frame's worth of per-modality toy features (C x H x W each).
struct Frame {
  int index = 0;
  Tensor feat_visible;
  Tensor feat_thermal;
};

/// Feeds frames to the one-pass driver. The driver requests frames strictly
/// in order and never asks for frame t+1 before the prediction for frame t is
/// recorded.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int count() const = 0;
  virtual Frame frame(int index) = 0;
};

class MemoryFrameSource : public FrameSource {
 public:
  MemoryFrameSource(std::vector<Tensor> visible, std::vector<Tensor> thermal);
  int count() const override { return static_cast<int>(visible_.size()); }
  Frame frame(int index) override;

 private:
  std::vector<Tensor> visible_, thermal_;
};

/// Reads feat_rgb/NNNNNN.tns and feat_ir/NNNNNN.tns lazily from a sequence
/// directory.
class DirectoryFrameSource : public FrameSource {
 public:
  DirectoryFrameSource(std::filesystem::path sequence_dir, int frame_count);
  int count() const override { return frame_count_; }
  Frame frame(int index) override;
  static bool features_present(const std::filesystem::path& sequence_dir);

 private:
  std::filesystem::path dir_;
  int frame_count_;
};

/// Featureless source for trackers that only consume annotations.
class EmptyFrameSource : public FrameSource {
 public:
  explicit EmptyFrameSource(int frame_count) : frame_count_(frame_count) {}
  int count() const override { return frame_count_; }
  Frame frame(int index) override { return Frame{index, Tensor(), Tensor()}; }

 private:
  int frame_count_;
};

struct StepResult {
  BoundingBox box;
  double confidence = 0.0;
};

class Tracker {
 public:
  virtual ~Tracker() = default;
  /// Receives frame 0 and the ground-truth box; returns the frame-0 output.
  virtual StepResult initialize(const Frame& first, const BoundingBox& init) = 0;
  virtual StepResult step(const Frame& frame) = 0;
  virtual std::string name() const = 0;
};

/// One-pass result: exactly one prediction per frame, with wall time.
struct OpeResult {
  std::string sequence;
  std::vector<BoundingBox> boxes;
  std::vector<double> confidences;
  std::vector<double> millis;
  bool aborted = false;
  std::string abort_reason;

  double total_seconds() const;
  double fps() const;

  /// Lines of "frame,x,y,w,h,confidence,millis".
  void write_csv(std::ostream& os) const;
  static OpeResult read_csv(std::istream& is, std::string sequence_name);
  void write_csv_file(const std::filesystem::path& path) const;
  static OpeResult read_csv_file(const std::filesystem::path& path, std::string sequence_name);
};

/// Runs the tracker once through the sequence: initialized from the frame-0
/// ground truth, never re-initialized, frames visited strictly in order. A
/// tracker exception aborts the sequence; the remaining frames are recorded
/// as empty boxes and the result is flagged.
OpeResult run_ope(Tracker& tracker, const SequenceRecord& record, FrameSource& frames);

enum class TrackMode { kLocal, kGlobal };

/// Hysteresis switch: local drops to global below theta_low, global returns
/// to local at or above theta_high, anything in the dead band keeps the mode.
TrackMode lt_switch(TrackMode mode, double confidence, double theta_low, double theta_high);

struct GlobalSearchResult {
  int row = 0;  // template top-left cell of the best placement
  int col = 0;
  double score = 0.0;
};

/// Exhaustive normalized cross-correlation of the template over the whole
/// feature map; no search window.
GlobalSearchResult global_search(const Tensor& tmpl, const Tensor& features);

/// Zero-normalized cross-correlation of tmpl (C x th x tw) over every valid
/// placement in search (C x H x W); returns (H-th+1) x (W-tw+1).
Tensor ncc_correlate(const Tensor& search, const Tensor& tmpl);

struct ToyTrackerConfig {
  FusionPipeline pipeline;
  bool long_term = false;
  double theta_low = 0.3;
  double theta_high = 0.6;
  int template_radius = 2;   // template spans 2r+1 cells
  int search_radius = 5;     // local window half-size in cells
  int feature_stride = 16;   // pixels per feature cell
  double adf_gain = 4.0;     // confidence-gate sharpness
  std::uint64_t seed = 7;    // parameter initialization
};

/// Reference tracker: fixed frame-0 templates per modality, NCC responses
/// from the discriminative (channel-fused) and complementary (concatenated)
/// branches, combined per the ablation pipeline, plus the optional
/// local/global switcher for long-term sequences.
class HmftToyTracker : public Tracker {
 public:
  explicit HmftToyTracker(ToyTrackerConfig cfg);
  StepResult initialize(const Frame& first, const BoundingBox& init) override;
  StepResult step(const Frame& frame) override;
  std::string name() const override;
  TrackMode mode() const { return mode_; }
  /// Ring of the most recent normalized confidence scores, newest last.
  std::vector<double> recent_confidences() const;

 private:
  struct Window {
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;
  };
  Window search_window(bool global) const;
  Tensor branch_response(const Tensor& crop_v, const Tensor& crop_t) const;

  ToyTrackerConfig cfg_;
  int channels_ = 0, map_h_ = 0, map_w_ = 0;
  double box_w_ = 0, box_h_ = 0;
  int center_row_ = 0, center_col_ = 0;
  Tensor tmpl_visible_, tmpl_thermal_, tmpl_fused_, tmpl_concat_;
  DffParams dff_;
  MamParams mam_disc_, mam_comp_;
  AdfParams adf_;
  TrackMode mode_ = TrackMode::kLocal;

  static constexpr int kConfidenceRing = 8;
  std::array<double, kConfidenceRing> confidence_ring_{};
  int ring_size_ = 0, ring_next_ = 0;
  void push_confidence(double c);
};

/// Replays the ground truth (visible first, thermal as fallback); absent
/// frames yield the empty box, unannotated frames carry the last annotation.
class EchoTracker : public Tracker {
 public:
  explicit EchoTracker(const SequenceRecord& record);
  StepResult initialize(const Frame& first, const BoundingBox& init) override;
  StepResult step(const Frame& frame) override;
  std::string name() const override { return "echo-gt"; }

 private:
  const SequenceRecord& record_;
  BoundingBox last_;
};

/// Reports the initialization box forever.
class StaticTracker : public Tracker {
 public:
  StepResult initialize(const Frame& first, const BoundingBox& init) override;
  StepResult step(const Frame& frame) override;
  std::string name() const override { return "static-init"; }

 private:
  BoundingBox init_;
};

/// Reports the empty box on every frame, including frame 0.
class EmptyBoxTracker : public Tracker {
 public:
  StepResult initialize(const Frame& first, const BoundingBox& init) override;
  StepResult step(const Frame& frame) override;
  std::string name() const override { return "empty-box"; }
};

}  // namespace rgbt
