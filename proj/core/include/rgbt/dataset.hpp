#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rgbt/attributes.hpp"
#include "rgbt/metrics.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

enum class Subset { kShortTerm, kLongTerm, kMaskAnnotated };

std::string_view subset_name(Subset s);
std::optional<Subset> subset_from_name(std::string_view name);

/// 3x3 projective transform, stored with the bottom-right entry normalized
/// to one. Construction rejects near-singular matrices.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty);
  static Homography from_values(const std::array<double, 9>& values);

  double det() const;
  Homography inverse() const;
  /// Maps a point; throws GeometryError when the image is at infinity.
  std::array<double, 2> map_point(double x, double y) const;

  friend bool operator==(const Homography& a, const Homography& b) { return a.m == b.m; }
};

/// Axis-aligned hull of the four box corners mapped through H.
BoundingBox apply_alignment(const BoundingBox& box, const Homography& h);

/// More than this many consecutive frames without a target makes a sequence
/// long-term.
inline constexpr int kLongTermAbsenceFrames = 20;

/// One video: metadata, per-modality annotations at a fixed interval,
/// attribute labels, optional masks, and the initial-frame alignment.
struct SequenceRecord {
  std::string name;
  Subset subset = Subset::kShortTerm;
  int frame_count = 0;
  int interval = 10;
  Homography alignment;
  BoxTrack gt_visible;  // one entry per annotated frame
  BoxTrack gt_thermal;
  AttributeTrack frame_attributes;
  std::optional<AttributeSet> sequence_attributes;  // manual sequence-level labels
  std::map<int, FrameMask> masks;                   // keyed by frame index

  int annotated_count() const;
  std::vector<int> annotated_indices() const;

  /// Longest span of consecutive absent annotations, in frames.
  int max_absence_span() const;
  bool qualifies_long_term() const { return max_absence_span() > kLongTermAbsenceFrames; }

  /// Manual sequence labels (when present) merged with the union of
  /// frame-level flags, so a frame-level flag always implies the sequence
  /// flag.
  AttributeSet effective_sequence_attributes() const;

  /// Checks every structural invariant; throws ProtocolError on violation.
  void validate() const;

  friend bool operator==(const SequenceRecord& a, const SequenceRecord& b);
};

/// Reads a sequence directory (manifest.txt, gt_rgb.txt, gt_ir.txt,
/// attr_frame.txt, optional attr_seq.txt and masks/). Errors carry file and
/// line.
SequenceRecord parse_sequence(const std::filesystem::path& dir);

/// Writes the record in the same layout parse_sequence reads.
void write_sequence(const std::filesystem::path& dir, const SequenceRecord& record);

/// All sequence directories under a dataset root, sorted by name.
std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& root);

struct AlignmentStats {
  double mean = 0.0;
  double median = 0.0;
  int samples = 0;
};

/// Center distances between the two modality boxes, pooled over all annotated
/// frames of all records.
AlignmentStats alignment_stats(std::span<const SequenceRecord> records);

// Run-length mask files: "width height start_value" header, then run lengths
// that alternate starting at start_value and sum to width*height.
void write_mask(std::ostream& os, const FrameMask& mask);
FrameMask read_mask(std::istream& is);
void write_mask_file(const std::filesystem::path& path, const FrameMask& mask);
FrameMask read_mask_file(const std::filesystem::path& path);

void write_tensor_file(const std::filesystem::path& path, const Tensor& t, int precision = 17);
Tensor read_tensor_file(const std::filesystem::path& path);

/// Zero-based frame index as a fixed-width six digit file stem.
std::string frame_stem(int frame_index);

}  // namespace rgbt
