#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rgbt/metrics.hpp"

namespace rgbt {

/// The 13 challenge attributes, in the canonical file/report order.
enum class Attribute : int {
  kTB = 0,  // target blur
  kCM,      // camera movement
  kEI,      // extreme illumination
  kDEF,     // deformation
  kPO,      // partial occlusion
  kFO,      // full occlusion
  kSV,      // scale variation
  kTC,      // thermal clutter
  kFM,      // fast moving
  kBC,      // background clutter
  kOV,      // out of view
  kLR,      // low resolution
  kTVS,     // thermal-visible separation
};

inline constexpr int kAttributeCount = 13;

std::string_view attribute_name(Attribute a);
std::optional<Attribute> attribute_from_name(std::string_view name);
std::array<Attribute, kAttributeCount> all_attributes();

/// FM, SV, LR and TVS are derived mechanically from annotations; the other
/// nine only ever come from label files.
bool attribute_is_derived(Attribute a);

struct AttributeSet {
  std::array<bool, kAttributeCount> flags{};

  bool test(Attribute a) const { return flags[static_cast<int>(a)]; }
  void set(Attribute a, bool v = true) { flags[static_cast<int>(a)] = v; }
  bool any() const;

  AttributeSet& operator|=(const AttributeSet& o);
  friend AttributeSet operator|(AttributeSet a, const AttributeSet& b) { return a |= b; }
  friend bool operator==(const AttributeSet& a, const AttributeSet& b) {
    return a.flags == b.flags;
  }
};

/// Per-annotated-frame attribute labels. Frames may carry several flags or
/// none.
struct AttributeTrack {
  std::vector<AttributeSet> frames;

  AttributeSet united() const;
  friend bool operator==(const AttributeTrack& a, const AttributeTrack& b) {
    return a.frames == b.frames;
  }
};

inline constexpr double kFastMotionThresholdPx = 20.0;
inline constexpr double kScaleVariationLow = 0.5;
inline constexpr double kScaleVariationHigh = 2.0;
inline constexpr double kLowResolutionArea = 400.0;

/// Fast moving: the center offset between a frame and the previous annotated
/// frame, normalized by the index gap, is strictly larger than 20 px. The
/// first frame is never flagged; absent frames break the chain.
std::vector<bool> derive_fm(const BoxTrack& gt, std::span<const int> frame_indices,
                            double threshold_px = kFastMotionThresholdPx);

/// Scale variation: area ratio against the first annotated box falls outside
/// the closed interval [0.5, 2]. Throws ValueError on a zero-area initial box.
std::vector<bool> derive_sv(const BoxTrack& gt, double low = kScaleVariationLow,
                            double high = kScaleVariationHigh);

/// Low resolution: box area strictly below 400 square pixels.
std::vector<bool> derive_lr(const BoxTrack& gt, double area_threshold = kLowResolutionArea);

/// Thermal-visible separation: the two modality boxes have zero overlap.
/// Frames missing either modality are skipped (false).
std::vector<bool> derive_tvs(const BoxTrack& gt_visible, const BoxTrack& gt_thermal);

/// All four derivable attributes folded into one track. FM, SV and LR read
/// the visible ground truth; TVS compares both modalities.
AttributeTrack derived_attribute_track(const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                       std::span<const int> frame_indices);

}  // namespace rgbt
