#include "residuals/residual.hpp"

#include "core/distributions.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace funres {

namespace {

// Double-double accumulator (error-free transformations).
struct TwoDouble {
  double hi = 0.0, lo = 0.0;

  void add(double a) {
    const double s = hi + a;
    const double bb = s - hi;
    const double err = (hi - (s - bb)) + (a - bb);
    lo += err;
    hi = s + lo;
    lo -= hi - s;
  }
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    add(std::fma(a, b, -p));
  }
  double value() const { return hi + lo; }
};

double normal_pdf_at_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return std_normal_pdf(std_normal_quantile(p));
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

const char* scale_name(Scale s) { return s == Scale::Uniform ? "uniform" : "normal"; }

Scale parse_scale(const std::string& name) {
  if (name == "uniform") return Scale::Uniform;
  if (name == "normal") return Scale::Normal;
  fail(ErrorCode::InvalidArgument, "unknown scale: " + name + " (expected uniform or normal)");
}

FunctionalResidual functional_residual(const FittedModel& model, int y, std::span<const double> raw,
                                       std::size_t index) {
  if (y < 0) fail(ErrorCode::InvalidArgument, "outcome must be non-negative");
  return {model.cumulative_prob(y - 1, raw), model.cumulative_prob(y, raw), index};
}

ResidualSet compute_residuals(const FittedModel& model, const Dataset& data) {
  const Eigen::MatrixXd x = model.design.matrix(data);
  Eigen::MatrixXd z;
  if (model.spec.family == Family::HurdlePoisson) z = model.zero_design.matrix(data);
  ResidualSet out;
  out.residuals.reserve(data.rows());
  out.y.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::RowVectorXd xr = x.row(row);
    const Eigen::RowVectorXd zr = z.size() ? Eigen::RowVectorXd(z.row(row)) : Eigen::RowVectorXd();
    const int y = data.y()[i];
    FunctionalResidual r{y > 0 ? model.cumulative_prob_rows(y - 1, xr, zr) : 0.0, model.cumulative_prob_rows(y, xr, zr),
                         i};
    if (!(r.hi - r.lo >= kMinWidth)) {
      out.excluded.push_back(i);
      continue;
    }
    out.residuals.push_back(r);
    out.y.push_back(y);
  }
  return out;
}

double eval(const FunctionalResidual& r, double t) {
  if (t <= r.lo) return t >= r.hi ? 1.0 : 0.0;
  if (t >= r.hi) return 1.0;
  return std::clamp((t - r.lo) / (r.hi - r.lo), 0.0, 1.0);
}

double density(const FunctionalResidual& r, double t) {
  return (t > r.lo && t <= r.hi && r.hi > r.lo) ? 1.0 / (r.hi - r.lo) : 0.0;
}

double density_normal_scale(const FunctionalResidual& r, double z) {
  if (!(r.hi > r.lo)) return 0.0;
  const double zl = r.lo <= 0.0 ? -INFINITY : std_normal_quantile(r.lo);
  const double zh = r.hi >= 1.0 ? INFINITY : std_normal_quantile(r.hi);
  return (z > zl && z <= zh) ? std_normal_pdf(z) / (r.hi - r.lo) : 0.0;
}

std::pair<double, double> to_normal_scale(const FunctionalResidual& r) {
  const double lo = std::clamp(r.lo, kClipEpsilon, 1.0 - kClipEpsilon);
  const double hi = std::clamp(r.hi, kClipEpsilon, 1.0 - kClipEpsilon);
  return {std_normal_quantile(lo), std_normal_quantile(hi)};
}

double surrogate_draw(const FunctionalResidual& r, Link link, RngStream& rng) {
  double u = r.lo + (r.hi - r.lo) * rng.uniform_open();
  u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  return LinkFunctions::quantile(link, u);
}

double surrogate_draw(const FunctionalResidual& r, const FittedModel& model, RngStream& rng) {
  if (model.spec.family != Family::CumulativeLink)
    fail(ErrorCode::UnsupportedFamily,
         std::string("surrogate draws need a cumulative-link model, got ") + family_name(model.spec.family));
  return surrogate_draw(r, model.spec.link, rng);
}

double sign_residual(const FunctionalResidual& r) { return r.lo + r.hi - 1.0; }

double point_summary(const FunctionalResidual& r, Scale scale) {
  if (scale == Scale::Uniform) return 0.5 * (r.lo + r.hi);
  const double w = r.hi - r.lo;
  if (w < 1e-7) {
    const double mid = std::clamp(0.5 * (r.lo + r.hi), kClipEpsilon, 1.0 - kClipEpsilon);
    return std_normal_quantile(mid);
  }
  return (normal_pdf_at_quantile(r.lo) - normal_pdf_at_quantile(r.hi)) / w;
}

namespace {

void require_classical(const FittedModel& m) {
  const Family f = m.spec.family;
  if (f != Family::BinaryLogit && f != Family::Poisson && f != Family::QuasiPoisson)
    fail(ErrorCode::UnsupportedFamily, std::string("Pearson and deviance residuals are defined for binary and "
                                                   "Poisson families only, not ") +
                                           family_name(f));
}

}  // namespace

double pearson_residual(const FittedModel& model, int y, std::span<const double> raw) {
  require_classical(model);
  const double mu = model.mean(raw);
  if (model.spec.family == Family::BinaryLogit) return (y - mu) / std::sqrt(mu * (1.0 - mu));
  return (y - mu) / std::sqrt(mu);
}

double deviance_residual(const FittedModel& model, int y, std::span<const double> raw) {
  require_classical(model);
  const double mu = model.mean(raw);
  if (model.spec.family == Family::BinaryLogit) {
    const double d = y == 1 ? -2.0 * std::log(mu) : -2.0 * std::log1p(-mu);
    return (y == 1 ? 1.0 : -1.0) * std::sqrt(std::max(d, 0.0));
  }
  const double d = y == 0 ? 2.0 * mu : 2.0 * (y * std::log(y / mu) - (y - mu));
  const double s = y > mu ? 1.0 : (y < mu ? -1.0 : 0.0);
  return s * std::sqrt(std::max(d, 0.0));
}

// ---------------------------------------------------------------- ResidualCurve

ResidualCurve::ResidualCurve(std::vector<double> knots, std::vector<double> values, bool exact, std::size_t n)
    : knots_(std::move(knots)), values_(std::move(values)), exact_(exact), n_(n) {
  if (knots_.size() != values_.size() || knots_.size() < 2)
    fail(ErrorCode::InvalidArgument, "curve needs matching knots and values (at least two)");
}

double ResidualCurve::operator()(double t) const {
  if (t <= knots_.front()) return values_.front();
  if (t >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto k = static_cast<std::size_t>(it - knots_.begin());
  const double a = knots_[k - 1], b = knots_[k];
  if (t == a) return values_[k - 1];
  const double w = (t - a) / (b - a);
  return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

double ResidualCurve::sup_deviation() const {
  double m = 0.0;
  for (std::size_t k = 0; k < knots_.size(); ++k) m = std::max(m, std::abs(values_[k] - knots_[k]));
  return m;
}

ResidualCurve average_curve(std::span<const FunctionalResidual> residuals) {
  const std::size_t n = residuals.size();
  if (n == 0) fail(ErrorCode::EmptyInput, "average_curve needs at least one residual");

  std::vector<double> knots;
  knots.reserve(2 * n + 2);
  knots.push_back(0.0);
  knots.push_back(1.0);
  for (const auto& r : residuals) {
    knots.push_back(std::clamp(r.lo, 0.0, 1.0));
    knots.push_back(std::clamp(r.hi, 0.0, 1.0));
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> rate(n);
  std::vector<std::size_t> by_lo(n), by_hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = residuals[i].hi - residuals[i].lo;
    rate[i] = w > 0 ? 1.0 / w : 0.0;
  }
  std::iota(by_lo.begin(), by_lo.end(), 0);
  std::iota(by_hi.begin(), by_hi.end(), 0);
  std::sort(by_lo.begin(), by_lo.end(), [&](auto a, auto b) { return residuals[a].lo < residuals[b].lo; });
  std::sort(by_hi.begin(), by_hi.end(), [&](auto a, auto b) { return residuals[a].hi < residuals[b].hi; });

  // Res(t) * n = done + sum_active (t - lo_i) r_i = done + t S1 - S2.
  TwoDouble s1, s2;
  std::size_t done = 0, p = 0, q = 0, active = 0;
  std::vector<double> values(knots.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const double t = knots[k];
    for (; p < n && residuals[by_lo[p]].lo <= t; ++p) {
      const auto i = by_lo[p];
      if (rate[i] > 0) {
        s1.add(rate[i]);
        s2.add_product(residuals[i].lo, rate[i]);
        ++active;
      }
    }
    for (; q < n && residuals[by_hi[q]].hi <= t; ++q) {
      const auto i = by_hi[q];
      if (rate[i] > 0) {
        s1.add(-rate[i]);
        s2.add_product(-residuals[i].lo, rate[i]);
        --active;
      }
      ++done;
    }
    if (active == 0) s1 = s2 = TwoDouble{};
    TwoDouble acc;
    acc.add(static_cast<double>(done));
    acc.add_product(t, s1.hi);
    acc.add_product(t, s1.lo);
    acc.add(-s2.hi);
    acc.add(-s2.lo);
    double v = std::clamp(acc.value() / static_cast<double>(n), 0.0, 1.0);
    v = std::max(v, prev);
    values[k] = prev = v;
  }
  return ResidualCurve(std::move(knots), std::move(values), true, n);
}

ResidualCurve average_curve_grid(std::span<const FunctionalResidual> residuals, int points) {
  if (points < 2) fail(ErrorCode::InvalidArgument, "grid needs at least two points");
  const ResidualCurve exact = average_curve(residuals);
  std::vector<double> t(static_cast<std::size_t>(points)), v(t.size());
  for (int k = 0; k < points; ++k) {
    t[static_cast<std::size_t>(k)] = static_cast<double>(k) / (points - 1);
    v[static_cast<std::size_t>(k)] = exact(t[static_cast<std::size_t>(k)]);
  }
  return ResidualCurve(std::move(t), std::move(v), false, residuals.size());
}

// ---------------------------------------------------------------- export

std::string residual_csv(const ResidualSet& set) {
  std::string out = "index,y,lo,hi,z_lo,z_hi,point_uniform,point_normal,sign_residual\n";
  for (std::size_t k = 0; k < set.residuals.size(); ++k) {
    const auto& r = set.residuals[k];
    const auto [zl, zh] = to_normal_scale(r);
    out += std::to_string(r.index);
    out += ',';
    out += std::to_string(set.y[k]);
    for (double v : {r.lo, r.hi, zl, zh, point_summary(r, Scale::Uniform), point_summary(r, Scale::Normal),
                     sign_residual(r)}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_residual_csv(const std::string& path, const ResidualSet& set) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + path);
  f << residual_csv(set);
  if (!f) fail(ErrorCode::Io, "write failed: " + path);
}

}  // namespace funres
