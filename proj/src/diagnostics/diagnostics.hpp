#pragma once

#include "residuals/residual.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace funres {

/// Averaged residual function against the identity.
struct FnFnCurve {
  ResidualCurve curve;
  double sup_dev = 0.0;  // max over knots of |Res(t) - t|
  std::size_t n = 0;
  std::string subgroup;  // empty for the full sample

  double at(double t) const { return curve(t); }
};

FnFnCurve fnfn(std::span<const FunctionalResidual> residuals);
/// Fn-Fn over residuals for which `keep` is true; throws EmptyInput if none.
FnFnCurve subgroup_fnfn(std::span<const FunctionalResidual> residuals,
                        const std::function<bool(const FunctionalResidual&)>& keep, std::string description);

struct HeatmapOptions {
  Scale scale = Scale::Uniform;
  int x_bins = 100;
  int y_bins = 100;
  /// Residual axis window on the normal scale; tails are folded into the edge bins.
  double normal_limit = 3.5;
};

/// Residual density mass binned against a covariate.
struct HeatmapGrid {
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  Eigen::MatrixXd mass;             // x_bins x y_bins
  std::vector<std::size_t> counts;  // observations per x-bin
  std::vector<double> mean_point;   // mean point summary per x-bin (NaN when empty)
  Scale scale = Scale::Uniform;

  int x_bins() const { return static_cast<int>(mass.rows()); }
  int y_bins() const { return static_cast<int>(mass.cols()); }
  double total_mass() const { return mass.sum(); }
  /// max |mean point summary| over x-bins holding at least `min_count` observations.
  double max_abs_bin_mean(std::size_t min_count) const;
};

/// Each residual deposits its interval mass analytically into the y-bins of its x-bin.
/// Constant covariates produce a single x-bin.
HeatmapGrid heatmap(std::span<const FunctionalResidual> residuals, std::span<const double> covariate,
                    const HeatmapOptions& opts = {});

struct LowessFit {
  std::vector<double> x;       // sorted
  std::vector<double> fitted;  // aligned with x
  double span = 2.0 / 3.0;
  int robustness_iters = 3;

  /// max(fitted) - min(fitted)
  double range() const;
};

/// Cleveland's robust locally weighted linear smoother (tricube kernel, bisquare
/// robustness weights). Points closer than `delta` reuse interpolated fits; a
/// negative delta selects 1% of the x range.
LowessFit lowess(std::span<const double> x, std::span<const double> v, double span = 2.0 / 3.0, int iters = 3,
                 double delta = -1.0);

/// LOWESS of residual point summaries on `scale` against a covariate.
LowessFit residual_lowess(std::span<const FunctionalResidual> residuals, std::span<const double> covariate,
                          Scale scale, double span = 2.0 / 3.0, int iters = 3);

/// Covariate values aligned with a residual set (by each residual's row index).
std::vector<double> covariate_for(const ResidualSet& set, const Eigen::VectorXd& column);

}  // namespace funres
