#include "rgbt/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "rgbt/errors.hpp"
#include "rgbt/rng.hpp"

namespace rgbt {

namespace {

bool in_any(const std::vector<FrameWindow>& windows, int frame) {
  for (const FrameWindow& w : windows) {
    if (w.contains(frame)) return true;
  }
  return false;
}

// Piecewise-linear interpolation over (frame, value) keys, clamped at both
// ends.
double interp(int frame, const std::vector<std::pair<int, double>>& keys) {
  if (keys.empty()) throw ValueError("synthetic spec needs at least one key frame");
  if (frame <= keys.front().first) return keys.front().second;
  if (frame >= keys.back().first) return keys.back().second;
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (frame <= keys[i].first) {
      const double t = static_cast<double>(frame - keys[i - 1].first) /
                       static_cast<double>(keys[i].first - keys[i - 1].first);
      return keys[i - 1].second + t * (keys[i].second - keys[i - 1].second);
    }
  }
  return keys.back().second;
}

}  // namespace

bool synthetic_target_absent(const SyntheticSpec& spec, int frame) {
  return in_any(spec.absent_windows, frame);
}

BoundingBox synthetic_box_at(const SyntheticSpec& spec, int frame) {
  std::vector<std::pair<int, double>> xs, ys, ws, hs;
  for (const Waypoint& w : spec.waypoints) {
    xs.emplace_back(w.frame, w.cx);
    ys.emplace_back(w.frame, w.cy);
  }
  for (const SizeKey& s : spec.size_schedule) {
    ws.emplace_back(s.frame, s.w);
    hs.emplace_back(s.frame, s.h);
  }
  const double cx = interp(frame, xs);
  const double cy = interp(frame, ys);
  const double w = interp(frame, ws);
  const double h = interp(frame, hs);
  return {cx - w / 2.0, cy - h / 2.0, w, h};
}

SyntheticSequence generate_synthetic(const SyntheticSpec& spec) {
  if (spec.frame_count <= 0 || spec.interval <= 0) {
    throw ValueError("synthetic spec needs positive frame count and interval");
  }
  if (spec.image_width % spec.feature_stride != 0 ||
      spec.image_height % spec.feature_stride != 0) {
    throw ValueError("image size must be a multiple of the feature stride");
  }
  if (synthetic_target_absent(spec, 0)) {
    throw ValueError("frame 0 must have a visible target (one-pass initialization)");
  }

  SyntheticSequence out;
  SequenceRecord& rec = out.record;
  rec.name = spec.name;
  rec.frame_count = spec.frame_count;
  rec.interval = spec.interval;
  rec.alignment = Homography::translation(spec.thermal_offset_x, spec.thermal_offset_y);

  // Ground truth at annotated frames.
  const std::vector<int> annotated = rec.annotated_indices();
  for (int f : annotated) {
    if (synthetic_target_absent(spec, f)) {
      rec.gt_visible.push_back(std::nullopt);
      rec.gt_thermal.push_back(std::nullopt);
      continue;
    }
    const BoundingBox v = synthetic_box_at(spec, f);
    BoundingBox t = v;
    t.x += spec.thermal_offset_x;
    t.y += spec.thermal_offset_y;
    rec.gt_visible.push_back(v);
    rec.gt_thermal.push_back(t);
  }

  rec.subset = rec.qualifies_long_term()
                   ? Subset::kLongTerm
                   : (spec.with_masks ? Subset::kMaskAnnotated : Subset::kShortTerm);

  // Frame attributes: manual degradation labels plus the derived flags.
  AttributeTrack manual;
  manual.frames.resize(annotated.size());
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    const int f = annotated[i];
    AttributeSet& s = manual.frames[i];
    s.set(Attribute::kOV, in_any(spec.absent_windows, f));
    s.set(Attribute::kPO, in_any(spec.partial_occlusion_windows, f));
    s.set(Attribute::kFO, in_any(spec.full_occlusion_windows, f));
    s.set(Attribute::kEI, in_any(spec.thermal_degraded_windows, f));
    s.set(Attribute::kTC, in_any(spec.thermal_interference_windows, f));
  }
  const AttributeTrack derived =
      derived_attribute_track(rec.gt_visible, rec.gt_thermal, annotated);
  rec.frame_attributes.frames.resize(annotated.size());
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    rec.frame_attributes.frames[i] = manual.frames[i] | derived.frames[i];
  }

  // Masks: the target rectangle rasterized at annotated frames.
  if (spec.with_masks) {
    for (int f : annotated) {
      if (synthetic_target_absent(spec, f)) {
        rec.masks[f] = FrameMask(spec.image_width, spec.image_height);
      } else {
        rec.masks[f] =
            rasterize_box(synthetic_box_at(spec, f), spec.image_width, spec.image_height);
      }
    }
  }

  rec.validate();

  if (!spec.with_features) return out;

  // Per-frame toy features: a channel-signature Gaussian bump at the target
  // center over seeded noise. Thermal inherits the modality offset and the
  // degradation windows.
  const int fh = spec.image_height / spec.feature_stride;
  const int fw = spec.image_width / spec.feature_stride;
  const int c = spec.feature_channels;

  Rng rng(spec.seed);
  std::vector<double> sig_v(c), sig_t(c);
  for (int ci = 0; ci < c; ++ci) {
    sig_v[ci] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.4, 1.2);
  }
  for (int ci = 0; ci < c; ++ci) {
    sig_t[ci] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.4, 1.2);
  }

  out.features_visible.reserve(spec.frame_count);
  out.features_thermal.reserve(spec.frame_count);

  for (int f = 0; f < spec.frame_count; ++f) {
    const bool absent = synthetic_target_absent(spec, f);
    const bool degraded = in_any(spec.thermal_degraded_windows, f);
    const bool interference = in_any(spec.thermal_interference_windows, f);

    double occlusion_gain = 1.0;
    if (in_any(spec.full_occlusion_windows, f)) {
      occlusion_gain = 0.0;
    } else if (in_any(spec.partial_occlusion_windows, f)) {
      occlusion_gain = spec.partial_occlusion_gain;
    }

    const BoundingBox box = synthetic_box_at(spec, f);
    const double spatial_sigma =
        std::max(1.0, 0.5 * (box.w + box.h) / (3.0 * spec.feature_stride));

    auto render = [&](const std::vector<double>& sig, double sig_scale, double cx_px,
                      double cy_px, double gain, double noise_sigma) {
      Tensor t({c, fh, fw});
      const double cr = cy_px / spec.feature_stride - 0.5;
      const double cc = cx_px / spec.feature_stride - 0.5;
      for (int ci = 0; ci < c; ++ci) {
        for (int r = 0; r < fh; ++r) {
          for (int co = 0; co < fw; ++co) {
            double v = noise_sigma * rng.gaussian();
            if (gain != 0.0) {
              const double d2 = (r - cr) * (r - cr) + (co - cc) * (co - cc);
              v += gain * sig_scale * sig[ci] *
                   std::exp(-d2 / (2.0 * spatial_sigma * spatial_sigma));
            }
            t(ci, r, co) = v;
          }
        }
      }
      return t;
    };

    double bump_v = absent ? 0.0 : spec.bump_amplitude * occlusion_gain;
    double bump_t = absent ? 0.0 : spec.bump_amplitude * occlusion_gain;
    double sigma_v = spec.noise_sigma;
    double sigma_t = spec.noise_sigma;
    if (degraded) {
      bump_t *= spec.thermal_degraded_gain;
      sigma_t = spec.thermal_degraded_sigma;
    }
    if (interference) {
      bump_v *= spec.interference_visible_gain;
      sigma_v = spec.interference_visible_sigma;
      sigma_t = spec.interference_thermal_sigma;
    }

    out.features_visible.push_back(
        render(sig_v, 1.0, box.cx(), box.cy(), bump_v, sigma_v));
    if (interference && !absent) {
      // Crosstalk: the visible signature leaks into the thermal channel with
      // inverted polarity at full target strength.
      out.features_thermal.push_back(render(sig_v, -1.0, box.cx() + spec.thermal_offset_x,
                                            box.cy() + spec.thermal_offset_y,
                                            spec.bump_amplitude * occlusion_gain, sigma_t));
    } else {
      out.features_thermal.push_back(render(sig_t, 1.0, box.cx() + spec.thermal_offset_x,
                                            box.cy() + spec.thermal_offset_y, bump_t, sigma_t));
    }
  }
  return out;
}

void write_synthetic(const std::filesystem::path& dataset_root, const SyntheticSequence& seq) {
  const std::filesystem::path dir = dataset_root / seq.record.name;
  write_sequence(dir, seq.record);
  if (!seq.features_visible.empty()) {
    std::filesystem::create_directories(dir / "feat_rgb");
    std::filesystem::create_directories(dir / "feat_ir");
    // Six significant digits keep the files small; the toy features carry
    // noise at the 5e-2 scale, so nothing observable is lost.
    for (std::size_t f = 0; f < seq.features_visible.size(); ++f) {
      const std::string stem = frame_stem(static_cast<int>(f)) + ".tns";
      write_tensor_file(dir / "feat_rgb" / stem, seq.features_visible[f], 6);
      write_tensor_file(dir / "feat_ir" / stem, seq.features_thermal[f], 6);
    }
  }
}

std::vector<SyntheticSpec> standard_benchmark(std::uint64_t seed) {
  std::vector<SyntheticSpec> specs;

  auto base = [&](const std::string& name, std::uint64_t salt) {
    SyntheticSpec s;
    s.name = name;
    s.seed = seed * 1000003ull + salt;
    return s;
  };

  // Clean short-term family, doubling as the mask subset. Individual
  // sequences exercise the derivable attributes.
  for (int k = 0; k < 6; ++k) {
    SyntheticSpec s = base("st_clean_0" + std::to_string(k), 100 + k);
    s.with_masks = true;
    s.thermal_offset_x = 2.0 + k;
    s.thermal_offset_y = 1.0;
    const double x0 = 90.0 + 10.0 * k, y0 = 90.0;
    switch (k) {
      case 0:  // plain diagonal drift
        s.waypoints = {{0, x0, y0}, {59, 420.0, 300.0}};
        break;
      case 1:  // zigzag
        s.waypoints = {{0, x0, y0}, {20, 380.0, 120.0}, {40, 140.0, 280.0}, {59, 400.0, 300.0}};
        break;
      case 2:  // scale ramp past the 2x area ratio
        s.waypoints = {{0, x0, y0}, {59, 380.0, 280.0}};
        s.size_schedule = {{0, 48, 48}, {30, 48, 48}, {50, 110, 110}, {59, 110, 110}};
        break;
      case 3:  // low-resolution target (area below 400)
        s.waypoints = {{0, x0, y0}, {59, 400.0, 280.0}};
        s.size_schedule = {{0, 18, 18}};
        break;
      case 4:  // fast segment: about 24.5 px/frame between frames 20 and 35
        s.waypoints = {{0, x0, y0}, {20, 120.0, 120.0}, {35, 440.0, 300.0}, {59, 420.0, 290.0}};
        break;
      case 5:  // separated modalities: 70 px thermal offset, disjoint boxes
        s.waypoints = {{0, x0, y0}, {59, 380.0, 300.0}};
        s.thermal_offset_x = 70.0;
        s.thermal_offset_y = 10.0;
        break;
    }
    if (k == 1) s.partial_occlusion_windows = {{25, 35}};
    specs.push_back(std::move(s));
  }

  // Thermal-degraded family: heavy sensor noise windows, visible clean.
  for (int k = 0; k < 6; ++k) {
    SyntheticSpec s = base("st_ei_0" + std::to_string(k), 200 + k);
    s.waypoints = {{0, 100.0 + 15.0 * k, 110.0}, {30, 300.0, 180.0 + 10.0 * k},
                   {59, 420.0, 300.0}};
    s.thermal_offset_x = 3.0;
    s.thermal_degraded_windows = {{16 + k, 44}};
    specs.push_back(std::move(s));
  }

  // Crosstalk family: inverted-signature interference that cancels the
  // channel-weighted sum while the concatenated branch keeps the target.
  for (int k = 0; k < 6; ++k) {
    SyntheticSpec s = base("st_tc_0" + std::to_string(k), 300 + k);
    s.waypoints = {{0, 110.0 + 12.0 * k, 100.0}, {30, 260.0, 200.0}, {59, 410.0, 290.0}};
    s.thermal_offset_x = 2.0;
    s.thermal_interference_windows = {{14 + k, 46}};
    specs.push_back(std::move(s));
  }

  // Out-of-view family: a 40-frame absence ending exactly at an annotated
  // frame, with re-entry far from the exit point.
  for (int k = 0; k < 6; ++k) {
    SyntheticSpec s = base("lt_ov_0" + std::to_string(k), 400 + k);
    s.frame_count = 100;
    const double exit_x = 110.0 + 8.0 * k, exit_y = 100.0;
    const double reentry_x = 430.0 - 6.0 * k, reentry_y = 310.0 - 4.0 * k;
    s.waypoints = {{0, exit_x, exit_y},
                   {29, exit_x + 20.0, exit_y + 15.0},
                   {70, reentry_x, reentry_y},
                   {99, reentry_x - 30.0, reentry_y - 20.0}};
    s.absent_windows = {{30, 70}};
    specs.push_back(std::move(s));
  }

  return specs;
}

}  // namespace rgbt
