#include "rgbt/attributes.hpp"

#include <cmath>

#include "rgbt/errors.hpp"

namespace rgbt {

namespace {
constexpr std::array<std::string_view, kAttributeCount> kNames = {
    "TB", "CM", "EI", "DEF", "PO", "FO", "SV", "TC", "FM", "BC", "OV", "LR", "TVS"};
}

std::string_view attribute_name(Attribute a) { return kNames[static_cast<int>(a)]; }

std::optional<Attribute> attribute_from_name(std::string_view name) {
  for (int i = 0; i < kAttributeCount; ++i) {
    if (kNames[i] == name) return static_cast<Attribute>(i);
  }
  return std::nullopt;
}

std::array<Attribute, kAttributeCount> all_attributes() {
  std::array<Attribute, kAttributeCount> out{};
  for (int i = 0; i < kAttributeCount; ++i) out[i] = static_cast<Attribute>(i);
  return out;
}

bool attribute_is_derived(Attribute a) {
  return a == Attribute::kFM || a == Attribute::kSV || a == Attribute::kLR ||
         a == Attribute::kTVS;
}

bool AttributeSet::any() const {
  for (bool f : flags) {
    if (f) return true;
  }
  return false;
}

AttributeSet& AttributeSet::operator|=(const AttributeSet& o) {
  for (int i = 0; i < kAttributeCount; ++i) flags[i] = flags[i] || o.flags[i];
  return *this;
}

AttributeSet AttributeTrack::united() const {
  AttributeSet u;
  for (const AttributeSet& s : frames) u |= s;
  return u;
}

std::vector<bool> derive_fm(const BoxTrack& gt, std::span<const int> frame_indices,
                            double threshold_px) {
  if (gt.size() != frame_indices.size()) {
    throw ProtocolError("derive_fm: track and frame indices have different lengths");
  }
  std::vector<bool> flags(gt.size(), false);
  for (std::size_t i = 1; i < gt.size(); ++i) {
    if (!gt[i] || !gt[i - 1]) continue;
    const int gap = frame_indices[i] - frame_indices[i - 1];
    if (gap <= 0) throw ProtocolError("derive_fm: frame indices must be strictly increasing");
    const double dx = gt[i]->cx() - gt[i - 1]->cx();
    const double dy = gt[i]->cy() - gt[i - 1]->cy();
    const double per_frame_offset = std::sqrt(dx * dx + dy * dy) / gap;
    flags[i] = per_frame_offset > threshold_px;
  }
  return flags;
}

std::vector<bool> derive_sv(const BoxTrack& gt, double low, double high) {
  std::vector<bool> flags(gt.size(), false);
  double initial_area = -1.0;
  for (const auto& b : gt) {
    if (b) {
      initial_area = b->area();
      break;
    }
  }
  if (gt.empty()) return flags;
  if (initial_area == 0.0) throw ValueError("derive_sv: initial box has zero area");
  if (initial_area < 0.0) return flags;  // no annotated boxes at all
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i]) continue;
    const double ratio = gt[i]->area() / initial_area;
    flags[i] = ratio < low || ratio > high;
  }
  return flags;
}

std::vector<bool> derive_lr(const BoxTrack& gt, double area_threshold) {
  std::vector<bool> flags(gt.size(), false);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i]) flags[i] = gt[i]->area() < area_threshold;
  }
  return flags;
}

std::vector<bool> derive_tvs(const BoxTrack& gt_visible, const BoxTrack& gt_thermal) {
  if (gt_visible.size() != gt_thermal.size()) {
    throw ProtocolError("derive_tvs: modality tracks have different lengths");
  }
  std::vector<bool> flags(gt_visible.size(), false);
  for (std::size_t i = 0; i < gt_visible.size(); ++i) {
    if (!gt_visible[i] || !gt_thermal[i]) continue;
    flags[i] = iou(*gt_visible[i], *gt_thermal[i]) == 0.0;
  }
  return flags;
}

AttributeTrack derived_attribute_track(const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                       std::span<const int> frame_indices) {
  const std::vector<bool> fm = derive_fm(gt_visible, frame_indices);
  const std::vector<bool> sv = derive_sv(gt_visible);
  const std::vector<bool> lr = derive_lr(gt_visible);
  const std::vector<bool> tvs = derive_tvs(gt_visible, gt_thermal);
  AttributeTrack track;
  track.frames.resize(gt_visible.size());
  for (std::size_t i = 0; i < gt_visible.size(); ++i) {
    track.frames[i].set(Attribute::kFM, fm[i]);
    track.frames[i].set(Attribute::kSV, sv[i]);
    track.frames[i].set(Attribute::kLR, lr[i]);
    track.frames[i].set(Attribute::kTVS, tvs[i]);
  }
  return track;
}

}  // namespace rgbt
