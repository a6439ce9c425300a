#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgbt/dataset.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

struct FrameWindow {
  int begin = 0;
  int end = 0;  // exclusive
  bool contains(int frame) const { return frame >= begin && frame < end; }
};

struct Waypoint {
  int frame = 0;
  double cx = 0.0;
  double cy = 0.0;
};

struct SizeKey {
  int frame = 0;
  double w = 0.0;
  double h = 0.0;
};

/// Recipe for one deterministic RGB-T sequence: piecewise-linear target
/// motion and size, a per-modality ground-truth offset, degradation windows,
/// and per-frame toy feature tensors (a channel-signature Gaussian bump over
/// seeded noise).
struct SyntheticSpec {
  std::string name = "synthetic";
  std::uint64_t seed = 1;
  int frame_count = 60;
  int image_width = 512;
  int image_height = 384;
  int interval = 10;
  int feature_stride = 16;
  int feature_channels = 8;

  std::vector<Waypoint> waypoints = {{0, 120.0, 120.0}};
  std::vector<SizeKey> size_schedule = {{0, 48.0, 48.0}};
  double thermal_offset_x = 0.0;
  double thermal_offset_y = 0.0;

  std::vector<FrameWindow> absent_windows;             // target fully out of view
  std::vector<FrameWindow> partial_occlusion_windows;  // bump attenuated, box kept
  std::vector<FrameWindow> full_occlusion_windows;     // bump removed, box kept
  std::vector<FrameWindow> thermal_degraded_windows;   // dim, noisy thermal
  // Crosstalk windows: the thermal bump carries the negated visible
  // signature, so the channel-weighted sum of the modalities cancels while
  // the concatenation keeps the evidence. Both sensors also pick up noise
  // and the visible target fades.
  std::vector<FrameWindow> thermal_interference_windows;

  double noise_sigma = 0.05;
  double bump_amplitude = 1.0;
  double partial_occlusion_gain = 0.4;
  double thermal_degraded_sigma = 0.3;
  double thermal_degraded_gain = 0.08;
  double interference_thermal_sigma = 0.4;
  double interference_visible_sigma = 0.15;
  double interference_visible_gain = 0.55;

  bool with_masks = false;
  bool with_features = true;
};

struct SyntheticSequence {
  SequenceRecord record;
  std::vector<Tensor> features_visible;  // one per frame when enabled
  std::vector<Tensor> features_thermal;
};

/// Target box center at an arbitrary frame (visible modality).
BoundingBox synthetic_box_at(const SyntheticSpec& spec, int frame);
bool synthetic_target_absent(const SyntheticSpec& spec, int frame);

/// Deterministic generation; the same spec yields byte-identical output.
SyntheticSequence generate_synthetic(const SyntheticSpec& spec);

/// Writes the record plus feat_rgb/ and feat_ir/ tensors under dir/name.
void write_synthetic(const std::filesystem::path& dataset_root, const SyntheticSequence& seq);

/// The committed desk-scale benchmark: clean, thermal-degraded, thermal-bias
/// and out-of-view re-entry families (24 sequences).
std::vector<SyntheticSpec> standard_benchmark(std::uint64_t seed);

}  // namespace rgbt
