#include "core/distributions.hpp"
#include "core/error.hpp"
#include "models/model.hpp"
#include "models/newton.hpp"

#include <cmath>
#include <limits>

namespace funres {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_rank(const Eigen::MatrixXd& x, bool add_constant, const char* what) {
  if (x.cols() == 0) return;
  Eigen::MatrixXd m = x;
  if (add_constant) {
    m.conservativeResize(Eigen::NoChange, x.cols() + 1);
    m.col(x.cols()).setOnes();
  }
  if (m.rows() < m.cols()) fail(ErrorCode::RankDeficient, std::string(what) + ": fewer rows than parameters");
  // Scale columns so the rank threshold is not fooled by units.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double s = m.col(j).cwiseAbs().maxCoeff();
    if (s > 0) m.col(j) /= s;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  if (qr.rank() < m.cols()) fail(ErrorCode::RankDeficient, std::string(what) + ": design matrix is rank deficient");
}

Eigen::MatrixXd inverse_information(const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd info = -hessian;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const auto k = info.rows();
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0).all())
    return Eigen::MatrixXd::Constant(k, k, NAN);
  return ldlt.solve(Eigen::MatrixXd::Identity(k, k));
}

NewtonOptions newton_options(const FitOptions& opts, std::size_t n) {
  NewtonOptions o;
  o.max_iterations = opts.max_iterations;
  o.tolerance = opts.tolerance;
  o.scale = static_cast<double>(n);
  return o;
}

[[noreturn]] void separation(const char* family) {
  fail(ErrorCode::Separation, std::string(family) +
                                  ": coefficient norm diverged past 1e3 (complete or quasi-complete separation)");
}

// ---------------------------------------------------------------- binary logit
struct BinaryFit {
  Eigen::VectorXd beta;
  NewtonResult res;
};

BinaryFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01, const FitOptions& opts) {
  const auto n = x.rows();
  auto eval = [&](const Eigen::VectorXd& b, bool deriv) {
    Objective o;
    const Eigen::VectorXd eta = x * b;
    double ll = 0.0;
    Eigen::VectorXd r(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // log p = -log(1 + e^{-eta}), log(1-p) = -log(1 + e^{eta})
      ll += y01(i) > 0.5 ? -log1p_exp(-eta(i)) : -log1p_exp(eta(i));
      const double p = logistic(eta(i));
      r(i) = y01(i) - p;
      w(i) = p * (1.0 - p);
    }
    o.value = ll;
    if (deriv) {
      o.gradient = x.transpose() * r;
      o.hessian = -(x.transpose() * w.asDiagonal() * x);
    }
    return o;
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(x.cols());
  const double ybar = y01.mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() == 1.0).all() && ybar > 0 && ybar < 1) start(j) = logit(ybar);
  BinaryFit out;
  out.res = maximize(eval, start, newton_options(opts, static_cast<std::size_t>(n)));
  out.beta = out.res.theta;
  if (out.res.diverged) separation("binary-logit");
  // Perfect prediction of every observation is complete separation even when the
  // gradient has already vanished numerically.
  if (out.res.at_theta.value > -1e-6 * static_cast<double>(n) && n > x.cols()) separation("binary-logit");
  return out;
}

// --------------------------------------------------------------------- poisson
NewtonResult fit_poisson_glm(const Eigen::MatrixXd& x, const std::vector<int>& y, const FitOptions& opts) {
  const auto n = x.rows();
  double lfact = 0.0;
  for (int v : y) lfact += std::lgamma(v + 1.0);
  auto eval = [&](const Eigen::VectorXd& b, bool deriv) {
    Objective o;
    const Eigen::VectorXd eta = x * b;
    double ll = -lfact;
    Eigen::VectorXd r(n), mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = std::exp(eta(i));
      ll += y[static_cast<std::size_t>(i)] * eta(i) - mu(i);
      r(i) = y[static_cast<std::size_t>(i)] - mu(i);
    }
    o.value = std::isfinite(ll) ? ll : kNegInf;
    if (deriv) {
      o.gradient = x.transpose() * r;
      o.hessian = -(x.transpose() * mu.asDiagonal() * x);
    }
    return o;
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(x.cols());
  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= static_cast<double>(n);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() == 1.0).all() && ybar > 0) {
      start(j) = std::log(ybar);
      break;
    }
  auto res = maximize(eval, start, newton_options(opts, static_cast<std::size_t>(n)));
  if (res.diverged) separation("poisson");
  return res;
}

// ---------------------------------------------------- zero-truncated poisson
NewtonResult fit_truncated_poisson(const Eigen::MatrixXd& x, const std::vector<int>& y, const FitOptions& opts) {
  const auto n = x.rows();
  double lfact = 0.0;
  for (int v : y) lfact += std::lgamma(v + 1.0);
  auto eval = [&](const Eigen::VectorXd& b, bool deriv) {
    Objective o;
    const Eigen::VectorXd eta = x * b;
    double ll = -lfact;
    Eigen::VectorXd r(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::exp(eta(i));
      const double yi = y[static_cast<std::size_t>(i)];
      ll += yi * eta(i) - mu - std::log(-std::expm1(-mu));
      // E[Y] under truncation: h = mu / (1 - e^{-mu}); dh/deta = h (1 - mu / expm1(mu)).
      const double h = mu < 1e-12 ? 1.0 + 0.5 * mu : mu / -std::expm1(-mu);
      const double dh = mu < 1e-8 ? 0.5 * mu : h * (1.0 - mu / std::expm1(mu));
      r(i) = yi - h;
      w(i) = dh;
    }
    o.value = std::isfinite(ll) ? ll : kNegInf;
    if (deriv) {
      o.gradient = x.transpose() * r;
      o.hessian = -(x.transpose() * w.asDiagonal() * x);
    }
    return o;
  };
  Eigen::VectorXd start = Eigen::VectorXd::Zero(x.cols());
  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= static_cast<double>(n);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() == 1.0).all()) {
      start(j) = std::log(std::max(ybar - 0.5, 0.1));
      break;
    }
  auto res = maximize(eval, start, newton_options(opts, static_cast<std::size_t>(n)));
  if (res.diverged) separation("hurdle-poisson (count part)");
  return res;
}

// ----------------------------------------------------------- adjacent-category
// theta = (alpha_0..alpha_{J-1}, beta). With T = number of alphas <= y, the
// score vector for category j is (1[k >= j])_k and (J - j) x.
Objective adjacent_loglik(const Eigen::MatrixXd& x, const std::vector<int>& y, int J, const Eigen::VectorXd& theta,
                          bool deriv) {
  const auto n = x.rows();
  const auto q = x.cols();
  const Eigen::VectorXd alpha = theta.head(J);
  const Eigen::VectorXd beta = theta.tail(q);
  const Eigen::VectorXd eta = q ? Eigen::VectorXd(x * beta) : Eigen::VectorXd::Zero(n);

  Objective o;
  o.value = 0.0;
  if (deriv) {
    o.gradient = Eigen::VectorXd::Zero(J + q);
    o.hessian = Eigen::MatrixXd::Zero(J + q, J + q);
  }
  Eigen::MatrixXd haa = Eigen::MatrixXd::Zero(J, J);
  Eigen::MatrixXd hab = Eigen::MatrixXd::Zero(J, q);
  Eigen::VectorXd var_y(n);
  Eigen::VectorXd resid(n);
  Eigen::VectorXd s(J + 1), cum(J);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    s(J) = 0.0;
    for (int j = J - 1; j >= 0; --j) s(j) = s(j + 1) + alpha(j) + eta(i);
    const double m = s.maxCoeff();
    Eigen::VectorXd p = (s.array() - m).exp();
    const double z = p.sum();
    p /= z;
    o.value += s(yi) - m - std::log(z);
    if (!deriv) continue;

    double acc = 0.0, ey = 0.0, ey2 = 0.0;
    for (int j = 0; j <= J; ++j) {
      ey += j * p(j);
      ey2 += static_cast<double>(j) * j * p(j);
    }
    Eigen::VectorXd ey_le(J);  // E[Y 1{Y <= k}]
    double accy = 0.0;
    for (int k = 0; k < J; ++k) {
      acc += p(k);
      accy += k * p(k);
      cum(k) = acc;
      ey_le(k) = accy;
    }
    for (int k = 0; k < J; ++k) o.gradient(k) += (yi <= k ? 1.0 : 0.0) - cum(k);
    resid(i) = ey - yi;
    var_y(i) = ey2 - ey * ey;
    for (int k = 0; k < J; ++k) {
      for (int l = k; l < J; ++l) haa(k, l) -= cum(k) - cum(k) * cum(l);  // cov(1{Y<=k}, 1{Y<=l}), k <= l
      // cov(1{Y<=k}, J - Y) = -(E[Y 1{Y<=k}] - P(Y<=k) E[Y])
      const double c = -(ey_le(k) - cum(k) * ey);
      if (q) hab.row(k) -= c * x.row(i);
    }
  }
  if (!deriv) return o;
  for (int k = 0; k < J; ++k)
    for (int l = 0; l < k; ++l) haa(k, l) = haa(l, k);
  o.hessian.topLeftCorner(J, J) = haa;
  if (q) {
    o.gradient.tail(q) = x.transpose() * resid;
    o.hessian.topRightCorner(J, q) = hab;
    o.hessian.bottomLeftCorner(q, J) = hab.transpose();
    o.hessian.bottomRightCorner(q, q) = -(x.transpose() * var_y.asDiagonal() * x);
  }
  return o;
}

// ------------------------------------------------------------- cumulative link
// Log-likelihood with derivatives in the natural (cutpoint, beta) parameterization.
Objective cumulative_loglik(const Eigen::MatrixXd& x, const std::vector<int>& y, int J, Link link,
                            const Eigen::VectorXd& cut, const Eigen::VectorXd& beta, bool deriv) {
  const auto n = x.rows();
  const auto q = x.cols();
  const Eigen::VectorXd eta = q ? Eigen::VectorXd(x * beta) : Eigen::VectorXd::Zero(n);
  Objective o;
  o.value = 0.0;
  Eigen::VectorXd gc, gb;
  Eigen::MatrixXd hcc, hcb;
  Eigen::VectorXd wbb(n), rb(n);
  if (deriv) {
    gc = Eigen::VectorXd::Zero(J);
    hcc = Eigen::MatrixXd::Zero(J, J);
    hcb = Eigen::MatrixXd::Zero(J, q);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    const double u = yi < J ? cut(yi) - eta(i) : INFINITY;
    const double l = yi > 0 ? cut(yi - 1) - eta(i) : -INFINITY;
    const double d = LinkFunctions::interval(link, l, u);
    if (!(d > 0)) {
      o.value = kNegInf;
      return o;
    }
    o.value += std::log(d);
    if (!deriv) continue;
    const double gu = LinkFunctions::pdf(link, u), gl = LinkFunctions::pdf(link, l);
    const double au = gu / d, al = -gl / d;
    const double buu = LinkFunctions::pdf_derivative(link, u) / d - au * au;
    const double bll = -LinkFunctions::pdf_derivative(link, l) / d - al * al;
    const double bul = -au * al;
    if (yi < J) {
      gc(yi) += au;
      hcc(yi, yi) += buu;
      if (q) hcb.row(yi) -= (buu + bul) * x.row(i);
    }
    if (yi > 0) {
      gc(yi - 1) += al;
      hcc(yi - 1, yi - 1) += bll;
      if (q) hcb.row(yi - 1) -= (bul + bll) * x.row(i);
    }
    if (yi > 0 && yi < J) {
      hcc(yi, yi - 1) += bul;
      hcc(yi - 1, yi) += bul;
    }
    rb(i) = -(au + al);
    wbb(i) = buu + 2.0 * bul + bll;
  }
  if (!deriv) return o;
  o.gradient = Eigen::VectorXd(J + q);
  o.gradient.head(J) = gc;
  o.hessian = Eigen::MatrixXd(J + q, J + q);
  o.hessian.topLeftCorner(J, J) = hcc;
  if (q) {
    o.gradient.tail(q) = x.transpose() * rb;
    o.hessian.topRightCorner(J, q) = hcb;
    o.hessian.bottomLeftCorner(q, J) = hcb.transpose();
    o.hessian.bottomRightCorner(q, q) = x.transpose() * wbb.asDiagonal() * x;
  }
  return o;
}

// theta = (c_0, log gaps d_1..d_{J-1}, beta): c_j = c_0 + sum_{m<=j} exp(d_m).
Eigen::VectorXd cutpoints_from_theta(const Eigen::VectorXd& theta, int J) {
  Eigen::VectorXd c(J);
  c(0) = theta(0);
  for (int j = 1; j < J; ++j) c(j) = c(j - 1) + std::exp(theta(j));
  return c;
}

Objective cumulative_reparam(const Eigen::MatrixXd& x, const std::vector<int>& y, int J, Link link,
                             const Eigen::VectorXd& theta, bool deriv) {
  const auto q = x.cols();
  const Eigen::VectorXd c = cutpoints_from_theta(theta, J);
  Objective nat = cumulative_loglik(x, y, J, link, c, theta.tail(q), deriv);
  if (!deriv || !std::isfinite(nat.value)) return nat;
  // Jacobian dc/dtheta_alpha.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(J, J);
  for (int j = 0; j < J; ++j) {
    jac(j, 0) = 1.0;
    for (int m = 1; m <= j; ++m) jac(j, m) = std::exp(theta(m));
  }
  const Eigen::VectorXd gc = nat.gradient.head(J);
  Objective o;
  o.value = nat.value;
  o.gradient = nat.gradient;
  o.gradient.head(J) = jac.transpose() * gc;
  o.hessian = nat.hessian;
  o.hessian.topLeftCorner(J, J) = jac.transpose() * nat.hessian.topLeftCorner(J, J) * jac;
  for (int m = 1; m < J; ++m) o.hessian(m, m) += gc.tail(J - m).sum() * std::exp(theta(m));
  if (q) {
    o.hessian.topRightCorner(J, q) = jac.transpose() * nat.hessian.topRightCorner(J, q);
    o.hessian.bottomLeftCorner(q, J) = o.hessian.topRightCorner(J, q).transpose();
  }
  return o;
}

std::vector<double> smoothed_cumulative(const std::vector<int>& y, int J) {
  std::vector<double> counts(static_cast<std::size_t>(J + 1), 0.5);
  for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> cum;
  double acc = 0.0;
  for (int j = 0; j < J; ++j) {
    acc += counts[static_cast<std::size_t>(j)];
    cum.push_back(acc / total);
  }
  return cum;
}

void validate_outcomes(const ModelSpec& spec, const Dataset& data, int J) {
  for (int v : data.y()) {
    if (spec.family == Family::BinaryLogit && v > 1)
      fail(ErrorCode::InvalidArgument, "binary-logit outcomes must be 0 or 1");
    if (is_ordinal(spec.family) && v > J)
      fail(ErrorCode::InvalidArgument, "ordinal outcome " + std::to_string(v) + " exceeds max category " +
                                           std::to_string(J));
  }
}

}  // namespace

Objective ordinal_log_likelihood(const ModelSpec& spec, const Dataset& data, int max_category,
                                 const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd x = design_matrix(data, spec.terms);
  if (theta.size() != max_category + x.cols()) fail(ErrorCode::InvalidArgument, "parameter length mismatch");
  switch (spec.family) {
    case Family::AdjacentCategory: return adjacent_loglik(x, data.y(), max_category, theta, true);
    case Family::CumulativeLink:
      return cumulative_loglik(x, data.y(), max_category, spec.link, theta.head(max_category),
                               theta.tail(x.cols()), true);
    default: fail(ErrorCode::UnsupportedFamily, "ordinal_log_likelihood needs an ordinal family");
  }
}

FittedModel fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts) {
  FittedModel m;
  m.spec = spec;
  m.nobs = data.rows();
  m.design = DesignBasis(spec.terms, data);
  const Eigen::MatrixXd x = m.design.matrix(data);
  const auto n = static_cast<std::size_t>(x.rows());
  const auto q = x.cols();

  int J = 0;
  if (is_ordinal(spec.family)) {
    J = spec.max_category > 0 ? spec.max_category : data.max_outcome();
    if (J < 1) fail(ErrorCode::InvalidArgument, "ordinal families need at least two categories");
    if (has_intercept(spec.terms))
      fail(ErrorCode::RankDeficient, "ordinal families carry their own intercepts; drop the '1' term");
  }
  m.max_category = J;
  validate_outcomes(spec, data, J);

  switch (spec.family) {
    case Family::BinaryLogit: {
      check_rank(x, false, "binary-logit");
      Eigen::VectorXd y01(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) y01(static_cast<Eigen::Index>(i)) = data.y()[i];
      auto f = fit_logistic(x, y01, opts);
      m.beta = f.beta;
      m.loglik = f.res.at_theta.value;
      m.vcov = inverse_information(f.res.at_theta.hessian);
      m.iterations = f.res.iterations;
      m.converged = f.res.converged;
      m.gradient_norm = f.res.gradient_norm;
      break;
    }
    case Family::Poisson:
    case Family::QuasiPoisson: {
      check_rank(x, false, family_name(spec.family));
      auto res = fit_poisson_glm(x, data.y(), opts);
      m.beta = res.theta;
      m.loglik = res.at_theta.value;
      m.vcov = inverse_information(res.at_theta.hessian);
      m.iterations = res.iterations;
      m.converged = res.converged;
      m.gradient_norm = res.gradient_norm;
      if (spec.family == Family::QuasiPoisson) {
        // Pearson chi-square / (n - q); beta is the Poisson estimate.
        const Eigen::VectorXd mu = (x * m.beta).array().exp();
        double chi2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double r = data.y()[i] - mu(static_cast<Eigen::Index>(i));
          chi2 += r * r / mu(static_cast<Eigen::Index>(i));
        }
        const double dof = static_cast<double>(n) - static_cast<double>(q);
        if (dof <= 0) fail(ErrorCode::InvalidArgument, "quasi-poisson needs more rows than coefficients");
        m.dispersion = chi2 / dof;
        m.dispersion_fallback = m.dispersion < 1.0;
        m.vcov *= m.dispersion;
      }
      break;
    }
    case Family::HurdlePoisson: {
      m.zero_design = DesignBasis(spec.zero_terms, data);
      const Eigen::MatrixXd z = m.zero_design.matrix(data);
      check_rank(z, false, "hurdle-poisson (zero part)");
      Eigen::VectorXd is_zero(static_cast<Eigen::Index>(n));
      std::vector<std::size_t> positive;
      for (std::size_t i = 0; i < n; ++i) {
        is_zero(static_cast<Eigen::Index>(i)) = data.y()[i] == 0 ? 1.0 : 0.0;
        if (data.y()[i] > 0) positive.push_back(i);
      }
      if (positive.empty()) fail(ErrorCode::InvalidArgument, "hurdle-poisson needs at least one positive count");
      auto zf = fit_logistic(z, is_zero, opts);
      Eigen::MatrixXd xp(static_cast<Eigen::Index>(positive.size()), q);
      std::vector<int> yp;
      for (std::size_t k = 0; k < positive.size(); ++k) {
        xp.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(positive[k]));
        yp.push_back(data.y()[positive[k]]);
      }
      check_rank(xp, false, "hurdle-poisson (count part)");
      auto pf = fit_truncated_poisson(xp, yp, opts);
      m.gamma = zf.beta;
      m.beta = pf.theta;
      m.loglik = zf.res.at_theta.value + pf.at_theta.value;
      const auto kz = m.gamma.size();
      m.vcov = Eigen::MatrixXd::Zero(q + kz, q + kz);
      m.vcov.topLeftCorner(q, q) = inverse_information(pf.at_theta.hessian);
      m.vcov.bottomRightCorner(kz, kz) = inverse_information(zf.res.at_theta.hessian);
      m.iterations = std::max(zf.res.iterations, pf.iterations);
      m.converged = zf.res.converged && pf.converged;
      m.gradient_norm = std::max(zf.res.gradient_norm, pf.gradient_norm * static_cast<double>(positive.size()) /
                                                           static_cast<double>(n));
      break;
    }
    case Family::AdjacentCategory: {
      check_rank(x, true, "adjacent-category-logit");
      const auto cum = smoothed_cumulative(data.y(), J);
      Eigen::VectorXd start = Eigen::VectorXd::Zero(J + q);
      for (int j = 0; j < J; ++j) {
        const double pj = j == 0 ? cum[0] : cum[static_cast<std::size_t>(j)] - cum[static_cast<std::size_t>(j - 1)];
        const double pn = (j + 1 < J ? cum[static_cast<std::size_t>(j + 1)] : 1.0) - cum[static_cast<std::size_t>(j)];
        start(j) = std::log(pj) - std::log(pn);
      }
      auto eval = [&](const Eigen::VectorXd& th, bool d) { return adjacent_loglik(x, data.y(), J, th, d); };
      auto res = maximize(eval, start, newton_options(opts, n));
      if (res.diverged) separation("adjacent-category-logit");
      m.alpha = res.theta.head(J);
      m.beta = res.theta.tail(q);
      m.loglik = res.at_theta.value;
      m.vcov = inverse_information(res.at_theta.hessian);
      m.iterations = res.iterations;
      m.converged = res.converged;
      m.gradient_norm = res.gradient_norm;
      break;
    }
    case Family::CumulativeLink: {
      check_rank(x, true, "cumulative-link");
      const auto cum = smoothed_cumulative(data.y(), J);
      Eigen::VectorXd start = Eigen::VectorXd::Zero(J + q);
      start(0) = LinkFunctions::quantile(spec.link, cum[0]);
      double prev = start(0);
      for (int j = 1; j < J; ++j) {
        const double c = LinkFunctions::quantile(spec.link, cum[static_cast<std::size_t>(j)]);
        start(j) = std::log(std::max(c - prev, 1e-3));
        prev = std::max(c, prev + 1e-3);
      }
      auto eval = [&](const Eigen::VectorXd& th, bool d) {
        return cumulative_reparam(x, data.y(), J, spec.link, th, d);
      };
      auto res = maximize(eval, start, newton_options(opts, n));
      if (res.diverged) separation("cumulative-link");
      m.alpha = cutpoints_from_theta(res.theta, J);
      m.beta = res.theta.tail(q);
      // Information in the natural (cutpoint, beta) parameterization.
      auto nat = cumulative_loglik(x, data.y(), J, spec.link, m.alpha, m.beta, true);
      m.loglik = nat.value;
      m.vcov = inverse_information(nat.hessian);
      m.iterations = res.iterations;
      m.converged = res.converged;
      m.gradient_norm = res.gradient_norm;
      break;
    }
  }
  return m;
}

}  // namespace funres
