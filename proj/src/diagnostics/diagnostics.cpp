#include "diagnostics/diagnostics.hpp"

#include "core/distributions.hpp"
#include "core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace funres {

FnFnCurve fnfn(std::span<const FunctionalResidual> residuals) {
  FnFnCurve c;
  c.curve = average_curve(residuals);
  c.sup_dev = c.curve.sup_deviation();
  c.n = residuals.size();
  return c;
}

FnFnCurve subgroup_fnfn(std::span<const FunctionalResidual> residuals,
                        const std::function<bool(const FunctionalResidual&)>& keep, std::string description) {
  std::vector<FunctionalResidual> sub;
  for (const auto& r : residuals)
    if (keep(r)) sub.push_back(r);
  if (sub.empty()) fail(ErrorCode::EmptyInput, "subgroup '" + description + "' is empty");
  FnFnCurve c = fnfn(sub);
  c.subgroup = std::move(description);
  return c;
}

// ---------------------------------------------------------------- heatmap

double HeatmapGrid::max_abs_bin_mean(std::size_t min_count) const {
  double m = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] >= min_count && std::isfinite(mean_point[i])) m = std::max(m, std::abs(mean_point[i]));
  return m;
}

HeatmapGrid heatmap(std::span<const FunctionalResidual> residuals, std::span<const double> covariate,
                    const HeatmapOptions& opts) {
  if (residuals.size() != covariate.size())
    fail(ErrorCode::InvalidArgument, "covariate length does not match the residuals");
  if (residuals.empty()) fail(ErrorCode::EmptyInput, "heatmap needs at least one residual");
  if (opts.x_bins < 1 || opts.y_bins < 1) fail(ErrorCode::InvalidArgument, "heatmap bins must be positive");
  if (opts.scale == Scale::Normal && !(opts.normal_limit > 0))
    fail(ErrorCode::InvalidArgument, "normal-scale window must be positive");

  HeatmapGrid g;
  g.scale = opts.scale;
  const auto [xmin_it, xmax_it] = std::minmax_element(covariate.begin(), covariate.end());
  const double xmin = *xmin_it, xmax = *xmax_it;
  if (!std::isfinite(xmin) || !std::isfinite(xmax)) fail(ErrorCode::InvalidArgument, "covariate must be finite");
  const int nx = xmax > xmin ? opts.x_bins : 1;
  g.x_edges.resize(static_cast<std::size_t>(nx) + 1);
  for (int i = 0; i <= nx; ++i) g.x_edges[static_cast<std::size_t>(i)] = xmin + (xmax - xmin) * i / nx;
  if (nx == 1 && xmax == xmin) g.x_edges = {xmin - 0.5, xmax + 0.5};

  const int ny = opts.y_bins;
  const double ylo = opts.scale == Scale::Uniform ? 0.0 : -opts.normal_limit;
  const double yhi = opts.scale == Scale::Uniform ? 1.0 : opts.normal_limit;
  g.y_edges.resize(static_cast<std::size_t>(ny) + 1);
  for (int j = 0; j <= ny; ++j) g.y_edges[static_cast<std::size_t>(j)] = ylo + (yhi - ylo) * j / ny;

  // Bin edges mapped to probability space; the outer normal-scale edges open to
  // the whole tail so every residual deposits total mass one.
  std::vector<double> t_edges(g.y_edges.size());
  for (std::size_t j = 0; j < t_edges.size(); ++j)
    t_edges[j] = opts.scale == Scale::Uniform ? g.y_edges[j] : std_normal_cdf(g.y_edges[j]);
  t_edges.front() = 0.0;
  t_edges.back() = 1.0;

  g.mass = Eigen::MatrixXd::Zero(nx, ny);
  g.counts.assign(static_cast<std::size_t>(nx), 0);
  std::vector<double> point_sum(static_cast<std::size_t>(nx), 0.0);

  for (std::size_t k = 0; k < residuals.size(); ++k) {
    const auto& r = residuals[k];
    int bx = nx == 1 ? 0 : static_cast<int>(std::floor((covariate[k] - xmin) / (xmax - xmin) * nx));
    bx = std::clamp(bx, 0, nx - 1);
    ++g.counts[static_cast<std::size_t>(bx)];
    point_sum[static_cast<std::size_t>(bx)] += point_summary(r, opts.scale);

    const double w = r.hi - r.lo;
    if (!(w > 0)) {
      auto j = std::upper_bound(t_edges.begin(), t_edges.end(), r.hi) - t_edges.begin() - 1;
      g.mass(bx, std::clamp<Eigen::Index>(j, 0, ny - 1)) += 1.0;
      continue;
    }
    auto j0 = std::upper_bound(t_edges.begin(), t_edges.end(), r.lo) - t_edges.begin() - 1;
    j0 = std::clamp<std::ptrdiff_t>(j0, 0, ny - 1);
    for (auto j = j0; j < ny; ++j) {
      const double a = std::max(r.lo, t_edges[static_cast<std::size_t>(j)]);
      const double b = std::min(r.hi, t_edges[static_cast<std::size_t>(j) + 1]);
      if (b > a) g.mass(bx, j) += (b - a) / w;
      if (t_edges[static_cast<std::size_t>(j) + 1] >= r.hi) break;
    }
  }
  g.mean_point.resize(static_cast<std::size_t>(nx));
  for (std::size_t i = 0; i < g.counts.size(); ++i)
    g.mean_point[i] = g.counts[i] ? point_sum[i] / static_cast<double>(g.counts[i]) : NAN;
  return g;
}

// ---------------------------------------------------------------- LOWESS

namespace {

// Weighted local linear fit at xs over x[nleft..], returning false when all weights vanish.
bool lowest(const std::vector<double>& x, const std::vector<double>& y, double xs, double& ys, std::size_t nleft,
            std::size_t nright, std::vector<double>& w, bool userw, const std::vector<double>& rw) {
  const std::size_t n = x.size();
  const double range = x[n - 1] - x[0];
  const double h = std::max(xs - x[nleft], x[nright] - xs);
  const double h9 = 0.999 * h, h1 = 0.001 * h;
  double a = 0.0;
  std::size_t j = nleft;
  for (; j < n; ++j) {
    w[j] = 0.0;
    const double r = std::abs(x[j] - xs);
    if (r <= h9) {
      if (r <= h1) {
        w[j] = 1.0;
      } else {
        const double q = r / h;
        const double c = 1.0 - q * q * q;
        w[j] = c * c * c;
      }
      if (userw) w[j] *= rw[j];
      a += w[j];
    } else if (x[j] > xs) {
      break;
    }
  }
  const std::size_t nrt = j - 1;
  if (a <= 0.0) return false;
  for (j = nleft; j <= nrt; ++j) w[j] /= a;
  if (h > 0.0) {
    a = 0.0;
    for (j = nleft; j <= nrt; ++j) a += w[j] * x[j];
    double b = xs - a;
    double c = 0.0;
    for (j = nleft; j <= nrt; ++j) c += w[j] * (x[j] - a) * (x[j] - a);
    if (std::sqrt(c) > 0.001 * range) {
      b /= c;
      for (j = nleft; j <= nrt; ++j) w[j] *= b * (x[j] - a) + 1.0;
    }
  }
  ys = 0.0;
  for (j = nleft; j <= nrt; ++j) ys += w[j] * y[j];
  return true;
}

}  // namespace

double LowessFit::range() const {
  if (fitted.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(fitted.begin(), fitted.end());
  return *hi - *lo;
}

LowessFit lowess(std::span<const double> xin, std::span<const double> vin, double span, int iters, double delta) {
  if (xin.size() != vin.size()) fail(ErrorCode::InvalidArgument, "lowess: x and v lengths differ");
  if (xin.size() < 3) fail(ErrorCode::InvalidArgument, "lowess needs at least three points");
  if (!(span > 0.0 && span <= 1.0)) fail(ErrorCode::InvalidArgument, "lowess span must lie in (0, 1]");
  if (iters < 0) fail(ErrorCode::InvalidArgument, "lowess iterations must be non-negative");

  const std::size_t n = xin.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xin[a] < xin[b]; });
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = xin[order[i]];
    y[i] = vin[order[i]];
  }
  if (x.front() == x.back()) fail(ErrorCode::InvalidArgument, "lowess needs x values that are not all identical");
  if (delta < 0) delta = 0.01 * (x.back() - x.front());

  std::vector<double> ys(n), rw(n, 1.0), res(n), w(n);
  const auto ns = std::max<std::size_t>(2, std::min(n, static_cast<std::size_t>(span * static_cast<double>(n) + 1e-7)));

  for (int iter = 1; iter <= iters + 1; ++iter) {
    std::size_t nleft = 0, nright = ns - 1, i = 0;
    std::ptrdiff_t last = -1;
    for (;;) {
      if (nright < n - 1) {
        const double d1 = x[i] - x[nleft];
        const double d2 = x[nright + 1] - x[i];
        if (d1 > d2) {
          ++nleft;
          ++nright;
          continue;
        }
      }
      if (!lowest(x, y, x[i], ys[i], nleft, nright, w, iter > 1, rw)) ys[i] = y[i];
      if (last < static_cast<std::ptrdiff_t>(i) - 1) {
        const auto l = static_cast<std::size_t>(last);
        const double denom = x[i] - x[l];
        for (std::size_t j = l + 1; j < i; ++j) {
          const double alpha = (x[j] - x[l]) / denom;
          ys[j] = alpha * ys[i] + (1.0 - alpha) * ys[l];
        }
      }
      last = static_cast<std::ptrdiff_t>(i);
      const auto l = static_cast<std::size_t>(last);
      const double cut = x[l] + delta;
      for (i = l + 1; i < n; ++i) {
        if (x[i] > cut) break;
        if (x[i] == x[static_cast<std::size_t>(last)]) {
          ys[i] = ys[static_cast<std::size_t>(last)];
          last = static_cast<std::ptrdiff_t>(i);
        }
      }
      i = std::max(static_cast<std::size_t>(last) + 1, i - 1);
      if (static_cast<std::size_t>(last) >= n - 1) break;
    }
    double sc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      res[k] = y[k] - ys[k];
      sc += std::abs(res[k]);
    }
    sc /= static_cast<double>(n);
    if (iter > iters) break;

    for (std::size_t k = 0; k < n; ++k) rw[k] = std::abs(res[k]);
    std::vector<double> tmp = rw;
    const std::size_t m1 = n / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(m1), tmp.end());
    double cmad;
    if (n % 2 == 0) {
      const double upper = tmp[m1];
      const double lower = *std::max_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(m1));
      cmad = 3.0 * (upper + lower);
    } else {
      cmad = 6.0 * tmp[m1];
    }
    if (cmad < 1e-7 * sc) break;
    const double c9 = 0.999 * cmad, c1 = 0.001 * cmad;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = std::abs(res[k]);
      if (r <= c1) {
        rw[k] = 1.0;
      } else if (r <= c9) {
        const double q = r / cmad;
        rw[k] = (1.0 - q * q) * (1.0 - q * q);
      } else {
        rw[k] = 0.0;
      }
    }
  }
  return LowessFit{std::move(x), std::move(ys), span, iters};
}

LowessFit residual_lowess(std::span<const FunctionalResidual> residuals, std::span<const double> covariate,
                          Scale scale, double span, int iters) {
  if (residuals.size() != covariate.size())
    fail(ErrorCode::InvalidArgument, "covariate length does not match the residuals");
  std::vector<double> v(residuals.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = point_summary(residuals[i], scale);
  return lowess(covariate, v, span, iters);
}

std::vector<double> covariate_for(const ResidualSet& set, const Eigen::VectorXd& column) {
  std::vector<double> out(set.residuals.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(set.residuals[k].index);
    if (i >= column.size()) fail(ErrorCode::InvalidArgument, "covariate column shorter than the residual rows");
    out[k] = column(i);
  }
  return out;
}

}  // namespace funres
