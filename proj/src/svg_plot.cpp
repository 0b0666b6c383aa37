#include "qotlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace qotlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    lo = std::floor(lo * 4.0) / 4.0;
    hi = std::ceil(hi * 4.0) / 4.0;
    if (hi - lo < 0.25) hi = lo + 0.25;
  }
};

}  // namespace

std::string loglog_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const std::optional<PlotLine>& line) {
  Range rx;
  Range ry;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (s.x[k] > 0.0 && s.y[k] > 0.0) {
        rx.add(std::log10(s.x[k]));
        ry.add(std::log10(s.y[k]));
      }
    }
  }
  rx.finish();
  if (line) {
    const double ln10 = std::log(10.0);
    ry.add((line->slope * rx.lo * ln10 + line->intercept) / ln10);
    ry.add((line->slope * rx.hi * ln10 + line->intercept) / ln10);
  }
  ry.finish();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double lx) { return kLeft + (lx - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double ly) { return kTop + (ry.hi - ly) / (ry.hi - ry.lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kLeft) << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Decade ticks, with quarter-decade ticks when the span is short.
  auto ticks = [](const Range& r) {
    std::vector<double> t;
    const double step = r.hi - r.lo <= 1.5 ? 0.25 : 1.0;
    for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9; v += step) t.push_back(v);
    return t;
  };
  for (double t : ticks(rx)) {
    os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
       << num(kTop + ph + 5) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">1e"
       << num(t) << "</text>\n";
  }
  for (double t : ticks(ry)) {
    os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
       << num(py(t)) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">1e" << num(t)
       << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 10) << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";

  double legend_y = kTop + 10;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % (sizeof kColors / sizeof kColors[0])];
    std::ostringstream pts;
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!(s.x[k] > 0.0 && s.y[k] > 0.0)) continue;
      const double cx = px(std::log10(s.x[k]));
      const double cy = py(std::log10(s.y[k]));
      pts << num(cx) << ',' << num(cy) << ' ';
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    os << "<text x=\"" << num(kLeft + pw + 10) << "\" y=\"" << num(legend_y) << "\" fill=\"" << color << "\">"
       << escape(s.label) << "</text>\n";
    legend_y += 16;
  }
  if (line) {
    const double ln10 = std::log(10.0);
    const double y0 = (line->slope * rx.lo * ln10 + line->intercept) / ln10;
    const double y1 = (line->slope * rx.hi * ln10 + line->intercept) / ln10;
    os << "<line x1=\"" << num(px(rx.lo)) << "\" y1=\"" << num(py(y0)) << "\" x2=\"" << num(px(rx.hi)) << "\" y2=\""
       << num(py(y1)) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
    os << "<text x=\"" << num(kLeft + pw + 10) << "\" y=\"" << num(legend_y) << "\">" << escape(line->label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qotlab
