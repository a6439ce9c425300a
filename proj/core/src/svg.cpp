#include "rgbt/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace rgbt {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

constexpr int kWidth = 640, kHeight = 480;
constexpr int kMarginLeft = 60, kMarginRight = 20, kMarginTop = 40, kMarginBottom = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_curve_svg(const std::string& title, const std::string& x_label,
                             std::span<const CurveSeries> series) {
  double x_min = 0.0, x_max = 1.0;
  bool first = true;
  for (const CurveSeries& s : series) {
    for (double v : s.x) {
      if (first) {
        x_min = x_max = v;
        first = false;
      } else {
        x_min = std::min(x_min, v);
        x_max = std::max(x_max, v);
      }
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (1.0 - y) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
        "font-family=\"sans-serif\">"
     << title << "</text>\n";

  // gridlines and y ticks at 0, 0.2, ..., 1
  for (int i = 0; i <= 5; ++i) {
    const double y = 0.2 * i;
    os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(py(y)) << "\" x2=\""
       << kWidth - kMarginRight << "\" y2=\"" << fmt(py(y))
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << fmt(py(y) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(y)
       << "</text>\n";
  }
  // x ticks: 6 evenly spaced
  for (int i = 0; i <= 5; ++i) {
    const double x = x_min + (x_max - x_min) * i / 5.0;
    os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << kHeight - kMarginBottom + 18
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(x)
       << "</text>\n";
  }
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
     << "</text>\n";
  os << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << fmt(plot_w)
     << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333333\"/>\n";

  int color = 0;
  for (const CurveSeries& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << kColors[color % 6]
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) os << ' ';
      os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
    }
    os << "\"/>\n";
    os << "<text x=\"" << kWidth - kMarginRight - 8 << "\" y=\""
       << kMarginTop + 18 + 16 * color << "\" text-anchor=\"end\" font-size=\"12\" "
       << "font-family=\"sans-serif\" fill=\"" << kColors[color % 6] << "\">" << s.label
       << "</text>\n";
    ++color;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace rgbt
