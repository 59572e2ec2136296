#pragma once

#include <string>
#include <vector>

namespace phonolase {

/// Minimal static line/scatter plots as standalone SVG files.
struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool points_only = false;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<SvgSeries> series;

  void write(const std::string& path) const;
};

}  // namespace phonolase
