#include "phonolase/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace phonolase {

namespace {

constexpr double kW = 720, kH = 460;
constexpr double kL = 86, kR = 24, kT = 44, kB = 58;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

}  // namespace

void SvgPlot::write(const std::string& path) const {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : NAN) : s.y[i];
      if (!std::isfinite(s.x[i]) || !std::isfinite(yv)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  const double xpad = 0.03 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  auto px = [&](double x) {
    return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR);
  };
  auto py = [&](double yv) {
    return kH - kB - (yv - ymin) / (ymax - ymin) * (kH - kT - kB);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("SvgPlot: cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
      << "' height='" << kH << "' viewBox='0 0 " << kW << " " << kH << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' "
         "font-family='sans-serif' font-size='16'>" << title << "</text>\n";

  // Axes with 6 ticks each.
  out << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR
      << "' y2='" << kH - kB << "' stroke='black'/>\n"
      << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='"
      << kH - kB << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    out << "<line x1='" << px(xv) << "' y1='" << kH - kB << "' x2='" << px(xv)
        << "' y2='" << kH - kB + 5 << "' stroke='black'/>\n"
        << "<text x='" << px(xv) << "' y='" << kH - kB + 20
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << fmt(xv) << "</text>\n"
        << "<line x1='" << kL - 5 << "' y1='" << py(yv) << "' x2='" << kL
        << "' y2='" << py(yv) << "' stroke='black'/>\n"
        << "<text x='" << kL - 8 << "' y='" << py(yv) + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
        << fmt(log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  out << "<text x='" << (kL + kW - kR) / 2 << "' y='" << kH - 14
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
      << x_label << "</text>\n"
      << "<text x='18' y='" << (kT + kH - kB) / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
         "transform='rotate(-90 18 " << (kT + kH - kB) / 2 << ")'>"
      << (log_y ? y_label + " (log scale)" : y_label) << "</text>\n";

  for (const auto& s : series) {
    if (s.points_only) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        const double yv =
            log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : NAN) : s.y[i];
        if (!std::isfinite(yv)) continue;
        out << "<circle cx='" << px(s.x[i]) << "' cy='" << py(yv)
            << "' r='3.5' fill='" << s.color << "'/>\n";
      }
    } else {
      out << "<polyline fill='none' stroke='" << s.color
          << "' stroke-width='1.4' points='";
      for (size_t i = 0; i < s.x.size(); ++i) {
        const double yv =
            log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : NAN) : s.y[i];
        if (!std::isfinite(yv)) continue;
        out << px(s.x[i]) << ',' << py(yv) << ' ';
      }
      out << "'/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace phonolase
