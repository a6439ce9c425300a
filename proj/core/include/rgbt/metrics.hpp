#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rgbt {

/// Axis-aligned box in pixels, top-left anchored. An absent or failed
/// prediction is the distinguished empty box with w = h = 0.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  static BoundingBox empty_box() { return {}; }
  bool is_empty() const { return w <= 0.0 || h <= 0.0; }
  double area() const { return is_empty() ? 0.0 : w * h; }
  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }

  friend bool operator==(const BoundingBox& a, const BoundingBox& b) {
    return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
  }
};

/// Intersection over union, in [0, 1]. Empty against anything is 0.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between box centers; +infinity when either box is
/// empty, so a lost prediction never clears a precision threshold.
double center_distance(const BoundingBox& a, const BoundingBox& b);

/// Binary per-pixel target mask, row-major.
struct FrameMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  FrameMask() = default;
  FrameMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  int count() const;
  bool empty_mask() const { return count() == 0; }

  friend bool operator==(const FrameMask& a, const FrameMask& b) {
    return a.width == b.width && a.height == b.height && a.bits == b.bits;
  }
};

inline constexpr int kCurveSamples = 21;

/// Success plot samples: thresholds 0, 0.05, ..., 1.0 and the fraction of
/// frames whose overlap clears each threshold. Rates are nonincreasing.
struct SuccessCurve {
  std::array<double, kCurveSamples> thresholds{};
  std::array<double, kCurveSamples> rates{};
  double auc() const;  // mean of the sampled rates
};

/// Precision plot samples over center-error thresholds 0, 2.5, ..., 50 px.
struct PrecisionCurve {
  std::array<double, kCurveSamples> thresholds{};
  std::array<double, kCurveSamples> rates{};
};

/// A frame counts at threshold t when overlap >= t, except at t = 0 where the
/// inequality is strict so a zero-overlap frame never counts.
SuccessCurve success_curve(std::span<const double> overlaps);
PrecisionCurve precision_curve(std::span<const double> center_errors);

/// Ground-truth track over annotated frames; nullopt marks an absent target.
using BoxTrack = std::vector<std::optional<BoundingBox>>;

/// valid[i] = a target is annotated at frame slot i in either modality.
std::vector<bool> valid_frames(const BoxTrack& gt_visible, const BoxTrack& gt_thermal);

/// Per-frame best overlap against the two modality ground truths.
std::vector<double> frame_max_overlaps(const std::vector<BoundingBox>& pred,
                                       const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                       const std::vector<bool>& valid);

/// Per-frame smallest center error against the two modality ground truths.
std::vector<double> frame_min_center_errors(const std::vector<BoundingBox>& pred,
                                            const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                            const std::vector<bool>& valid);

struct MsrResult {
  double value = 0.0;
  SuccessCurve curve;
  int valid_count = 0;
};

/// Maximum success rate: success AUC over per-frame max-overlap scores.
MsrResult msr(const std::vector<BoundingBox>& pred, const BoxTrack& gt_visible,
              const BoxTrack& gt_thermal, const std::vector<bool>& valid);

inline constexpr double kDefaultPrecisionThreshold = 20.0;

/// Maximum precision rate: fraction of valid frames whose smaller modality
/// center error is within tau (default 20 px).
double mpr(const std::vector<BoundingBox>& pred, const BoxTrack& gt_visible,
           const BoxTrack& gt_thermal, const std::vector<bool>& valid,
           double tau = kDefaultPrecisionThreshold);

/// Pixel IoU of one mask pair; both-empty scores 1.
double frame_jaccard(const FrameMask& pred, const FrameMask& gt);
/// Mean frame_jaccard over aligned mask lists.
double jaccard(std::span<const FrameMask> pred, std::span<const FrameMask> gt);

/// Boundary pixels: mask minus its 4-connected erosion (image border counts
/// as background).
FrameMask boundary_mask(const FrameMask& m);

/// Exact squared Euclidean distance to the nearest set pixel, per pixel.
/// Felzenszwalb-Huttenlocher two-pass transform; +inf where the mask is empty.
std::vector<double> squared_distance_transform(const FrameMask& m);

/// Contour F-measure of one mask pair at the given pixel tolerance.
double frame_f_score(const FrameMask& pred, const FrameMask& gt, double tolerance_px);
/// Mean frame_f_score over aligned mask lists.
double f_score(std::span<const FrameMask> pred, std::span<const FrameMask> gt,
               double tolerance_px);

/// 0.8% of the image diagonal, the usual contour-matching tolerance.
double default_boundary_tolerance(int width, int height);

/// Pixel-center rasterization of a box onto a width-by-height grid.
FrameMask rasterize_box(const BoundingBox& box, int width, int height);

}  // namespace rgbt
