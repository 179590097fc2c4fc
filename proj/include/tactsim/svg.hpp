#pragma once

#include <string>
#include <vector>

namespace tactsim {

// One named polyline for line_chart_svg; xs and ys must have equal length.
struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Minimal static line chart: axes, ticks, grid, legend. Deterministic output
// (fixed formatting, no timestamps). Throws InvariantError on empty or
// non-finite input.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

// Two g x g heatmaps side by side on a shared color scale; row 0 is drawn at
// the bottom so the panels match surface coordinates. Values are expected
// non-negative (forces); negative values render on a blue ramp.
std::string heatmap_pair_svg(const std::vector<double>& left, const std::vector<double>& right,
                             int grid, const std::string& left_title,
                             const std::string& right_title);

}  // namespace tactsim
