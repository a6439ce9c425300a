#include "rgbt/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "rgbt/errors.hpp"

namespace rgbt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.is_empty() || b.is_empty()) return 0.0;
  const double ix = std::max(a.x, b.x);
  const double iy = std::max(a.y, b.y);
  const double ix2 = std::min(a.x + a.w, b.x + b.w);
  const double iy2 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix2 - ix;
  const double ih = iy2 - iy;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  if (a.is_empty() || b.is_empty()) return kInf;
  const double dx = a.cx() - b.cx();
  const double dy = a.cy() - b.cy();
  return std::sqrt(dx * dx + dy * dy);
}

int FrameMask::count() const {
  int n = 0;
  for (std::uint8_t b : bits) n += b != 0;
  return n;
}

double SuccessCurve::auc() const {
  double s = 0.0;
  for (double r : rates) s += r;
  return s / kCurveSamples;
}

SuccessCurve success_curve(std::span<const double> overlaps) {
  SuccessCurve c;
  for (int k = 0; k < kCurveSamples; ++k) c.thresholds[k] = 0.05 * k;
  if (overlaps.empty()) return c;
  const double n = static_cast<double>(overlaps.size());
  for (int k = 0; k < kCurveSamples; ++k) {
    const double t = c.thresholds[k];
    int hits = 0;
    for (double o : overlaps) {
      if (k == 0 ? o > t : o >= t) ++hits;
    }
    c.rates[k] = hits / n;
  }
  for (int k = 1; k < kCurveSamples; ++k) assert(c.rates[k] <= c.rates[k - 1]);
  return c;
}

PrecisionCurve precision_curve(std::span<const double> center_errors) {
  PrecisionCurve c;
  for (int k = 0; k < kCurveSamples; ++k) c.thresholds[k] = 2.5 * k;
  if (center_errors.empty()) return c;
  const double n = static_cast<double>(center_errors.size());
  for (int k = 0; k < kCurveSamples; ++k) {
    int hits = 0;
    for (double e : center_errors) {
      if (e <= c.thresholds[k]) ++hits;
    }
    c.rates[k] = hits / n;
  }
  return c;
}

std::vector<bool> valid_frames(const BoxTrack& gt_visible, const BoxTrack& gt_thermal) {
  if (gt_visible.size() != gt_thermal.size()) {
    throw ProtocolError("valid_frames: modality tracks have different lengths");
  }
  std::vector<bool> valid(gt_visible.size());
  for (std::size_t i = 0; i < gt_visible.size(); ++i) {
    valid[i] = gt_visible[i].has_value() || gt_thermal[i].has_value();
  }
  return valid;
}

namespace {

void check_lengths(std::size_t pred, std::size_t gv, std::size_t gt, std::size_t valid) {
  if (pred != gv || gv != gt || gt != valid) {
    throw ProtocolError("metric inputs misaligned: pred=" + std::to_string(pred) +
                        " gt_v=" + std::to_string(gv) + " gt_t=" + std::to_string(gt) +
                        " valid=" + std::to_string(valid));
  }
}

}  // namespace

std::vector<double> frame_max_overlaps(const std::vector<BoundingBox>& pred,
                                       const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                       const std::vector<bool>& valid) {
  check_lengths(pred.size(), gt_visible.size(), gt_thermal.size(), valid.size());
  std::vector<double> out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    if (!gt_visible[i] && !gt_thermal[i]) {
      throw ProtocolError("frame " + std::to_string(i) + " flagged valid but has no ground truth");
    }
    double best = 0.0;
    if (gt_visible[i]) best = std::max(best, iou(pred[i], *gt_visible[i]));
    if (gt_thermal[i]) best = std::max(best, iou(pred[i], *gt_thermal[i]));
    out.push_back(best);
  }
  return out;
}

std::vector<double> frame_min_center_errors(const std::vector<BoundingBox>& pred,
                                            const BoxTrack& gt_visible, const BoxTrack& gt_thermal,
                                            const std::vector<bool>& valid) {
  check_lengths(pred.size(), gt_visible.size(), gt_thermal.size(), valid.size());
  std::vector<double> out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    if (!gt_visible[i] && !gt_thermal[i]) {
      throw ProtocolError("frame " + std::to_string(i) + " flagged valid but has no ground truth");
    }
    double best = kInf;
    if (gt_visible[i]) best = std::min(best, center_distance(pred[i], *gt_visible[i]));
    if (gt_thermal[i]) best = std::min(best, center_distance(pred[i], *gt_thermal[i]));
    out.push_back(best);
  }
  return out;
}

MsrResult msr(const std::vector<BoundingBox>& pred, const BoxTrack& gt_visible,
              const BoxTrack& gt_thermal, const std::vector<bool>& valid) {
  const std::vector<double> overlaps = frame_max_overlaps(pred, gt_visible, gt_thermal, valid);
  MsrResult r;
  r.curve = success_curve(overlaps);
  r.value = r.curve.auc();
  r.valid_count = static_cast<int>(overlaps.size());
  return r;
}

double mpr(const std::vector<BoundingBox>& pred, const BoxTrack& gt_visible,
           const BoxTrack& gt_thermal, const std::vector<bool>& valid, double tau) {
  if (tau <= 0.0) throw ValueError("mpr: tau must be positive");
  const std::vector<double> errors = frame_min_center_errors(pred, gt_visible, gt_thermal, valid);
  if (errors.empty()) return 0.0;
  int hits = 0;
  for (double e : errors) {
    if (e <= tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double frame_jaccard(const FrameMask& pred, const FrameMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("frame_jaccard: mask dimensions do not match");
  }
  int inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    inter += p && g;
    uni += p || g;
  }
  if (uni == 0) return 1.0;  // target absent and predicted absent
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard(std::span<const FrameMask> pred, std::span<const FrameMask> gt) {
  if (pred.size() != gt.size()) throw ProtocolError("jaccard: mask lists have different lengths");
  if (pred.empty()) throw ProtocolError("jaccard: no frames");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += frame_jaccard(pred[i], gt[i]);
  return s / static_cast<double>(pred.size());
}

FrameMask boundary_mask(const FrameMask& m) {
  FrameMask b(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const bool interior = x > 0 && m.at(x - 1, y) && x + 1 < m.width && m.at(x + 1, y) &&
                            y > 0 && m.at(x, y - 1) && y + 1 < m.height && m.at(x, y + 1);
      if (!interior) b.set(x, y, true);
    }
  }
  return b;
}

namespace {

// Empty lines carry a tall finite sentinel instead of infinity so the parabola
// arithmetic below stays NaN-free. It exceeds any reachable squared distance
// at image sizes this toolkit handles, and stays exact in a double.
constexpr double kFar = 1e12;

// 1D squared-distance transform by lower envelope of parabolas
// (Felzenszwalb-Huttenlocher). Exact for integer-grid inputs.
void dt_1d(std::vector<double>& f, int n, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + static_cast<double>(q) * q) -
                (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const FrameMask& m) {
  const int w = m.width, h = m.height;
  std::vector<double> dist(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      dist[static_cast<std::size_t>(y) * w + x] = m.at(x, y) ? 0.0 : kFar;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  for (int x = 0; x < w; ++x) {  // columns
    for (int y = 0; y < h; ++y) f[y] = dist[static_cast<std::size_t>(y) * w + x];
    dt_1d(f, h, d, v, z);
    for (int y = 0; y < h; ++y) dist[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {  // rows
    for (int x = 0; x < w; ++x) f[x] = dist[static_cast<std::size_t>(y) * w + x];
    dt_1d(f, w, d, v, z);
    for (int x = 0; x < w; ++x) dist[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  for (double& v2 : dist) {
    if (v2 >= kFar) v2 = kInf;
  }
  return dist;
}

double frame_f_score(const FrameMask& pred, const FrameMask& gt, double tolerance_px) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ShapeError("frame_f_score: mask dimensions do not match");
  }
  const FrameMask bp = boundary_mask(pred);
  const FrameMask bg = boundary_mask(gt);
  const int np = bp.count();
  const int ng = bg.count();
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;

  const double tol2 = tolerance_px * tolerance_px;
  const std::vector<double> dist_to_g = squared_distance_transform(bg);
  const std::vector<double> dist_to_p = squared_distance_transform(bp);

  int matched_p = 0, matched_g = 0;
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pred.width + x;
      if (bp.bits[i] && dist_to_g[i] <= tol2) ++matched_p;
      if (bg.bits[i] && dist_to_p[i] <= tol2) ++matched_g;
    }
  }
  const double precision = static_cast<double>(matched_p) / np;
  const double recall = static_cast<double>(matched_g) / ng;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double f_score(std::span<const FrameMask> pred, std::span<const FrameMask> gt,
               double tolerance_px) {
  if (pred.size() != gt.size()) throw ProtocolError("f_score: mask lists have different lengths");
  if (pred.empty()) throw ProtocolError("f_score: no frames");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += frame_f_score(pred[i], gt[i], tolerance_px);
  return s / static_cast<double>(pred.size());
}

double default_boundary_tolerance(int width, int height) {
  return 0.008 * std::sqrt(static_cast<double>(width) * width +
                           static_cast<double>(height) * height);
}

FrameMask rasterize_box(const BoundingBox& box, int width, int height) {
  FrameMask m(width, height);
  if (box.is_empty()) return m;
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    if (cy < box.y || cy >= box.y + box.h) continue;
    for (int x = 0; x < width; ++x) {
      const double cx = x + 0.5;
      if (cx >= box.x && cx < box.x + box.w) m.set(x, y, true);
    }
  }
  return m;
}

}  // namespace rgbt
