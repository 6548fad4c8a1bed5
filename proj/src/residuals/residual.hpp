#pragma once

#include "models/model.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace funres {

class RngStream;

enum class Scale { Uniform, Normal };
const char* scale_name(Scale s);
Scale parse_scale(const std::string& name);

/// Endpoints are clipped to [eps, 1 - eps] before the normal quantile.
inline constexpr double kClipEpsilon = 1e-10;
/// Intervals narrower than this are numerically impossible outcomes.
inline constexpr double kMinWidth = 1e-12;

/// The residual for one observation: the uniform distribution on (lo, hi].
struct FunctionalResidual {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t index = 0;

  double width() const { return hi - lo; }
};

/// (pi(y-1; x), pi(y; x)). No width check; see compute_residuals.
FunctionalResidual functional_residual(const FittedModel& model, int y, std::span<const double> raw,
                                       std::size_t index = 0);

struct ResidualSet {
  std::vector<FunctionalResidual> residuals;
  std::vector<int> y;                 // outcome for each entry of residuals
  std::vector<std::size_t> excluded;  // rows with hi - lo < kMinWidth
};

/// Residuals for every row of `data`; impossible outcomes are moved to `excluded`.
ResidualSet compute_residuals(const FittedModel& model, const Dataset& data);

/// clamp((t - lo) / (hi - lo), 0, 1)
double eval(const FunctionalResidual& r, double t);
/// 1/(hi - lo) on (lo, hi], else 0.
double density(const FunctionalResidual& r, double t);
/// phi(z)/(hi - lo) on (Phi^-1(lo), Phi^-1(hi)], else 0.
double density_normal_scale(const FunctionalResidual& r, double z);

/// (Phi^-1(max(lo, eps)), Phi^-1(min(hi, 1 - eps)))
std::pair<double, double> to_normal_scale(const FunctionalResidual& r);

/// G^-1(u) with u ~ U(lo, hi).
double surrogate_draw(const FunctionalResidual& r, Link link, RngStream& rng);
/// Same, taking the link from a cumulative-link model; other families throw UnsupportedFamily.
double surrogate_draw(const FunctionalResidual& r, const FittedModel& model, RngStream& rng);

/// lo + hi - 1 = Pr{y > Y} - Pr{y < Y}.
double sign_residual(const FunctionalResidual& r);

/// Uniform: the midpoint. Normal: E[Phi^-1(U(lo, hi))] = (phi(z_lo) - phi(z_hi)) / (hi - lo).
double point_summary(const FunctionalResidual& r, Scale scale);

/// Classical residuals for binary-logit, poisson and quasi-poisson models.
double pearson_residual(const FittedModel& model, int y, std::span<const double> raw);
double deviance_residual(const FittedModel& model, int y, std::span<const double> raw);

/// The averaged residual function Res(t) = (1/n) sum_i eval(r_i, t).
class ResidualCurve {
 public:
  ResidualCurve() = default;
  ResidualCurve(std::vector<double> knots, std::vector<double> values, bool exact, std::size_t n);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  bool exact() const { return exact_; }
  std::size_t n() const { return n_; }

  /// Linear interpolation between knots; exact when built by average_curve.
  double operator()(double t) const;
  /// max over knots of |Res(t) - t|.
  double sup_deviation() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  bool exact_ = false;
  std::size_t n_ = 0;
};

/// Exact piecewise-linear average with knots at the union of all endpoints plus {0, 1}.
ResidualCurve average_curve(std::span<const FunctionalResidual> residuals);
/// Grid-sampled average at `points` equally spaced t in [0, 1] (for plotting).
ResidualCurve average_curve_grid(std::span<const FunctionalResidual> residuals, int points = 512);

/// CSV with columns index, y, lo, hi, z_lo, z_hi, point_uniform, point_normal, sign_residual.
void write_residual_csv(const std::string& path, const ResidualSet& set);
std::string residual_csv(const ResidualSet& set);

}  // namespace funres
