#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qotlab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // nonpositive values are skipped
};

// log y = slope log x + intercept, drawn dashed over the x range of the data.
struct PlotLine {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;
};

// Standalone log-log SVG document.
std::string loglog_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const std::optional<PlotLine>& line = std::nullopt);

}  // namespace qotlab
