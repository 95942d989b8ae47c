#pragma once
// Static SVG plots: per-scale bar charts and rectangle heatmaps.

#include <string>
#include <vector>

namespace qrect::cli {

std::string bar_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<std::string>& labels, const std::vector<double>& values);

struct HeatCell {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  double value = 0.0;
};

/// Cells in data coordinates over [x0,x1] x [y0,y1]; colour ramps linearly
/// over [0, max value], legend on the right.
std::string heatmap_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                        const std::vector<HeatCell>& cells, double x0, double x1, double y0, double y1);

}  // namespace qrect::cli
