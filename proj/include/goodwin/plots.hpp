#pragma once
// Minimal deterministic SVG plotting: polyline/marker series on a framed axis
// box with nice-number ticks.  Pure text output with shortest round-trip
// number formatting and no timestamps, so identical inputs give identical
// bytes on every run.

#include <string>
#include <utility>
#include <vector>

namespace goodwin {

struct PlotSeries {
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  double width = 1.5;
  bool markers = false;  // draw point circles in addition to the line
  std::string label;     // legend entry; empty series are not listed
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  int width = 720;
  int height = 480;
};

// Renders the plot as a standalone SVG document.  Non-finite points split a
// series into separate polyline segments.  Throws ConfigError when no series
// contributes a finite point.
std::string render_svg(const PlotSpec& spec);

}  // namespace goodwin
