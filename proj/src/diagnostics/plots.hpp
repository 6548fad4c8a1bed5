#pragma once

#include "diagnostics/diagnostics.hpp"

#include <string>

namespace funres {

struct PlotLabels {
  std::string title;
  std::string x_label;
};

/// Heatmap with a linear white-to-dark ramp on cell mass; an optional LOWESS overlay
/// is drawn as a solid line together with a dashed reference line at the null center.
std::string heatmap_svg(const HeatmapGrid& grid, const PlotLabels& labels, const LowessFit* overlay = nullptr);
/// Res(t) against t with the dashed diagonal.
std::string fnfn_svg(const FnFnCurve& curve, const PlotLabels& labels);
/// LOWESS curve as a solid line with a dashed zero line (0.5 on the uniform scale).
std::string lowess_svg(const LowessFit& fit, Scale scale, const PlotLabels& labels);

/// Long-format cells: x_lo, x_hi, y_lo, y_hi, mass.
std::string heatmap_csv(const HeatmapGrid& grid);
/// Per x-bin count and mean point summary: x_lo, x_hi, count, mean_point.
std::string heatmap_bins_csv(const HeatmapGrid& grid);
std::string fnfn_csv(const FnFnCurve& curve);
std::string lowess_csv(const LowessFit& fit);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace funres
