#pragma once

#include <span>
#include <string>
#include <vector>

namespace rgbt {

struct CurveSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line-plot SVG (fixed 640x480 canvas, axes, ticks, legend).
/// y values are expected in [0, 1]; x spans the series range.
std::string render_curve_svg(const std::string& title, const std::string& x_label,
                             std::span<const CurveSeries> series);

}  // namespace rgbt
