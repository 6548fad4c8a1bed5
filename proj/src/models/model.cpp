#include "models/model.hpp"

#include "core/distributions.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace funres {

const char* family_name(Family f) {
  switch (f) {
    case Family::BinaryLogit: return "binary-logit";
    case Family::CumulativeLink: return "cumulative-link";
    case Family::AdjacentCategory: return "adjacent-category-logit";
    case Family::Poisson: return "poisson";
    case Family::QuasiPoisson: return "quasi-poisson";
    case Family::HurdlePoisson: return "hurdle-poisson";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  for (Family f : {Family::BinaryLogit, Family::CumulativeLink, Family::AdjacentCategory, Family::Poisson,
                   Family::QuasiPoisson, Family::HurdlePoisson})
    if (name == family_name(f)) return f;
  if (name == "adjacent-category") return Family::AdjacentCategory;
  if (name == "logistic") return Family::BinaryLogit;
  fail(ErrorCode::InvalidArgument, "unknown family: " + name);
}

const char* link_name(Link l) {
  switch (l) {
    case Link::Logit: return "logit";
    case Link::Probit: return "probit";
    case Link::Cloglog: return "cloglog";
  }
  return "?";
}

Link parse_link(const std::string& name) {
  for (Link l : {Link::Logit, Link::Probit, Link::Cloglog})
    if (name == link_name(l)) return l;
  fail(ErrorCode::InvalidArgument, "unknown link: " + name);
}

bool is_ordinal(Family f) { return f == Family::CumulativeLink || f == Family::AdjacentCategory; }
bool is_count(Family f) {
  return f == Family::Poisson || f == Family::QuasiPoisson || f == Family::HurdlePoisson;
}

// ---------------------------------------------------------------------------

double LinkFunctions::cdf(Link l, double z) {
  if (z == INFINITY) return 1.0;
  if (z == -INFINITY) return 0.0;
  switch (l) {
    case Link::Logit: return logistic(z);
    case Link::Probit: return std_normal_cdf(z);
    case Link::Cloglog: return -std::expm1(-std::exp(z));
  }
  return NAN;
}

double LinkFunctions::sf(Link l, double z) {
  if (z == INFINITY) return 0.0;
  if (z == -INFINITY) return 1.0;
  switch (l) {
    case Link::Logit: return logistic(-z);
    case Link::Probit: return std_normal_sf(z);
    case Link::Cloglog: return std::exp(-std::exp(z));
  }
  return NAN;
}

double LinkFunctions::pdf(Link l, double z) {
  if (!std::isfinite(z)) return 0.0;
  switch (l) {
    case Link::Logit: {
      const double g = logistic(z);
      return g * logistic(-z);
    }
    case Link::Probit: return std_normal_pdf(z);
    case Link::Cloglog: return z > 700 ? 0.0 : std::exp(z - std::exp(z));
  }
  return NAN;
}

double LinkFunctions::pdf_derivative(Link l, double z) {
  if (!std::isfinite(z)) return 0.0;
  switch (l) {
    case Link::Logit: return pdf(l, z) * (logistic(-z) - logistic(z));
    case Link::Probit: return -z * std_normal_pdf(z);
    case Link::Cloglog: return pdf(l, z) * (1.0 - std::exp(z));
  }
  return NAN;
}

double LinkFunctions::quantile(Link l, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    fail(ErrorCode::Domain, "link quantile requires p in [0,1]");
  }
  switch (l) {
    case Link::Logit: return logit(p);
    case Link::Probit: return std_normal_quantile(p);
    case Link::Cloglog: return std::log(-std::log1p(-p));
  }
  return NAN;
}

double LinkFunctions::interval(Link l, double lower, double upper) {
  if (lower > 0 && l != Link::Cloglog) return sf(l, lower) - sf(l, upper);
  if (l == Link::Cloglog && lower > -1.0) return sf(l, lower) - sf(l, upper);
  return cdf(l, upper) - cdf(l, lower);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd adjacent_category_probs(const Eigen::VectorXd& alpha, double eta) {
  const Eigen::Index J = alpha.size();
  if (J < 1) fail(ErrorCode::InvalidArgument, "adjacent-category model needs at least one intercept");
  // log p_j = sum_{k >= j} (alpha_k + eta) + const; p_J is the reference.
  Eigen::VectorXd s(J + 1);
  s(J) = 0.0;
  for (Eigen::Index j = J - 1; j >= 0; --j) s(j) = s(j + 1) + alpha(j) + eta;
  const double m = s.maxCoeff();
  Eigen::VectorXd p = (s.array() - m).exp();
  return p / p.sum();
}

Eigen::VectorXd adjacent_category_probs(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                        const Eigen::VectorXd& x) {
  if (beta.size() != x.size()) fail(ErrorCode::InvalidArgument, "beta and x lengths differ");
  return adjacent_category_probs(alpha, beta.size() ? beta.dot(x) : 0.0);
}

double hurdle_cumulative(double p_zero, double mu, int y) {
  if (y < 0) return 0.0;
  if (y == 0) return p_zero;
  return p_zero + (1.0 - p_zero) * truncated_poisson_cdf(y, mu);
}

double quasipoisson_cumulative(double mu, double dispersion, int y) { return nb1_cdf(y, mu, dispersion); }

// ---------------------------------------------------------------------------

FittedModel FittedModel::from_parameters(const ModelSpec& spec, const Dataset& reference, Eigen::VectorXd alpha,
                                         Eigen::VectorXd beta, Eigen::VectorXd gamma, double dispersion) {
  FittedModel m;
  m.spec = spec;
  m.design = DesignBasis(spec.terms, reference);
  if (spec.family == Family::HurdlePoisson) m.zero_design = DesignBasis(spec.zero_terms, reference);
  m.alpha = std::move(alpha);
  m.beta = std::move(beta);
  m.gamma = std::move(gamma);
  m.dispersion = dispersion;
  m.converged = true;
  m.nobs = reference.rows();
  if (static_cast<std::size_t>(m.beta.size()) != m.design.width())
    fail(ErrorCode::InvalidArgument, "beta length does not match the design width");
  if (spec.family == Family::HurdlePoisson && static_cast<std::size_t>(m.gamma.size()) != m.zero_design.width())
    fail(ErrorCode::InvalidArgument, "gamma length does not match the zero-part design width");
  if (is_ordinal(spec.family)) {
    m.max_category = static_cast<int>(m.alpha.size());
    if (m.max_category < 1) fail(ErrorCode::InvalidArgument, "ordinal model needs at least one intercept");
    if (spec.max_category && spec.max_category != m.max_category)
      fail(ErrorCode::InvalidArgument, "alpha length does not match max_category");
    if (spec.family == Family::CumulativeLink)
      for (Eigen::Index j = 1; j < m.alpha.size(); ++j)
        if (!(m.alpha(j) > m.alpha(j - 1))) fail(ErrorCode::InvalidArgument, "cutpoints must be strictly increasing");
  }
  if (spec.family == Family::QuasiPoisson && !(dispersion >= 0))
    fail(ErrorCode::InvalidArgument, "dispersion must be >= 0");
  m.dispersion_fallback = spec.family == Family::QuasiPoisson && dispersion < 1.0;
  const auto k = static_cast<Eigen::Index>(m.num_parameters());
  m.vcov = Eigen::MatrixXd::Constant(k, k, NAN);
  return m;
}

std::vector<std::string> FittedModel::coefficient_names() const {
  std::vector<std::string> names;
  if (is_ordinal(spec.family))
    for (Eigen::Index j = 0; j < alpha.size(); ++j) names.push_back("alpha" + std::to_string(j));
  for (const auto& c : design.column_names()) names.push_back(c);
  if (spec.family == Family::HurdlePoisson)
    for (const auto& c : zero_design.column_names()) names.push_back("zero:" + c);
  return names;
}

Eigen::VectorXd FittedModel::estimates() const {
  const Eigen::Index na = is_ordinal(spec.family) ? alpha.size() : 0;
  const Eigen::Index ng = spec.family == Family::HurdlePoisson ? gamma.size() : 0;
  Eigen::VectorXd e(na + beta.size() + ng);
  if (na) e.head(na) = alpha;
  e.segment(na, beta.size()) = beta;
  if (ng) e.tail(ng) = gamma;
  return e;
}

Eigen::VectorXd FittedModel::standard_errors() const {
  if (vcov.rows() == 0) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_parameters()), NAN);
  return vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::size_t FittedModel::num_parameters() const { return static_cast<std::size_t>(estimates().size()); }

double FittedModel::aic() const {
  if (spec.family == Family::QuasiPoisson) return NAN;
  return -2.0 * loglik + 2.0 * static_cast<double>(num_parameters());
}

double FittedModel::cumulative_prob_rows(int y, const Eigen::RowVectorXd& xrow, const Eigen::RowVectorXd& zrow) const {
  if (y < 0) return 0.0;
  if (is_ordinal(spec.family) && y > max_category)
    fail(ErrorCode::InvalidArgument, "outcome " + std::to_string(y) + " exceeds the largest category " +
                                         std::to_string(max_category));
  const double eta = beta.size() ? xrow.dot(beta) : 0.0;
  switch (spec.family) {
    case Family::BinaryLogit:
      if (y > 1) fail(ErrorCode::InvalidArgument, "binary outcome must be 0 or 1");
      return y >= 1 ? 1.0 : logistic(-eta);
    case Family::CumulativeLink:
      if (y >= max_category) return 1.0;
      return LinkFunctions::cdf(spec.link, alpha(y) - eta);
    case Family::AdjacentCategory: {
      if (y >= max_category) return 1.0;
      const Eigen::VectorXd p = adjacent_category_probs(alpha, eta);
      // Sum the smaller tail for precision.
      if (y < max_category / 2) return p.head(y + 1).sum();
      return 1.0 - p.tail(max_category - y).sum();
    }
    case Family::Poisson: return poisson_cdf(y, std::exp(eta));
    case Family::QuasiPoisson: return quasipoisson_cumulative(std::exp(eta), dispersion, y);
    case Family::HurdlePoisson: return hurdle_cumulative(logistic(zrow.dot(gamma)), std::exp(eta), y);
  }
  return NAN;
}

double FittedModel::cumulative_prob(int y, std::span<const double> raw) const {
  if (y < 0) return 0.0;
  Eigen::RowVectorXd z;
  if (spec.family == Family::HurdlePoisson) z = zero_design.row(raw);
  return cumulative_prob_rows(y, design.row(raw), z);
}

double FittedModel::cumulative_prob(int y, const Dataset& data, std::size_t row) const {
  std::vector<double> raw(data.cols());
  for (std::size_t j = 0; j < raw.size(); ++j)
    raw[j] = data.x()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
  return cumulative_prob(y, raw);
}

double FittedModel::mean_rows(const Eigen::RowVectorXd& xrow, const Eigen::RowVectorXd& zrow) const {
  const double eta = beta.size() ? xrow.dot(beta) : 0.0;
  switch (spec.family) {
    case Family::BinaryLogit: return logistic(eta);
    case Family::CumulativeLink: {
      double m = 0.0;
      for (int j = 0; j < max_category; ++j) m += LinkFunctions::sf(spec.link, alpha(j) - eta);
      return m;
    }
    case Family::AdjacentCategory: {
      const Eigen::VectorXd p = adjacent_category_probs(alpha, eta);
      double m = 0.0;
      for (Eigen::Index j = 0; j < p.size(); ++j) m += static_cast<double>(j) * p(j);
      return m;
    }
    case Family::Poisson:
    case Family::QuasiPoisson: return std::exp(eta);
    case Family::HurdlePoisson: {
      const double mu = std::exp(eta);
      return (1.0 - logistic(zrow.dot(gamma))) * mu / -std::expm1(-mu);
    }
  }
  return NAN;
}

double FittedModel::mean(std::span<const double> raw) const {
  Eigen::RowVectorXd z;
  if (spec.family == Family::HurdlePoisson) z = zero_design.row(raw);
  return mean_rows(design.row(raw), z);
}

int FittedModel::sample(std::span<const double> raw, RngStream& rng) const {
  const Eigen::RowVectorXd x = design.row(raw);
  const double eta = beta.size() ? x.dot(beta) : 0.0;
  switch (spec.family) {
    case Family::BinaryLogit: return rng.bernoulli(logistic(eta)) ? 1 : 0;
    case Family::CumulativeLink: {
      Eigen::VectorXd p(max_category + 1);
      double prev = 0.0;
      for (int j = 0; j < max_category; ++j) {
        const double c = LinkFunctions::cdf(spec.link, alpha(j) - eta);
        p(j) = std::max(0.0, c - prev);
        prev = c;
      }
      p(max_category) = std::max(0.0, 1.0 - prev);
      return rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    }
    case Family::AdjacentCategory: {
      const Eigen::VectorXd p = adjacent_category_probs(alpha, eta);
      return rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    }
    case Family::Poisson: return rng.poisson(std::exp(eta));
    case Family::QuasiPoisson: {
      const double mu = std::exp(eta);
      if (!(dispersion > 1.0)) return rng.poisson(mu);
      const double rate = 1.0 / (dispersion - 1.0);
      return rng.poisson(rng.gamma(mu * rate, rate));
    }
    case Family::HurdlePoisson: {
      const double p0 = logistic(zero_design.row(raw).dot(gamma));
      if (rng.bernoulli(p0)) return 0;
      return rng.truncated_poisson(std::exp(eta));
    }
  }
  return 0;
}

std::string FittedModel::summary_json() const {
  using nlohmann::json;
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["family"] = family_name(spec.family);
  if (spec.family == Family::CumulativeLink) j["link"] = link_name(spec.link);
  j["terms"] = format_terms(spec.terms);
  if (spec.family == Family::HurdlePoisson) j["zero_terms"] = format_terms(spec.zero_terms);
  if (is_ordinal(spec.family)) j["max_category"] = max_category;
  j["nobs"] = nobs;
  const auto names = coefficient_names();
  const auto est = estimates();
  const auto se = standard_errors();
  json coefs = json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    coefs.push_back({{"name", names[k]}, {"estimate", num(est(i))}, {"std_error", num(se(i))}});
  }
  j["coefficients"] = coefs;
  j["loglik"] = num(loglik);
  j["aic"] = num(aic());
  j["dispersion"] = num(dispersion);
  if (dispersion_fallback) j["dispersion_fallback"] = true;
  j["convergence"] = {{"converged", converged}, {"iterations", iterations}, {"gradient_norm", num(gradient_norm)}};
  return j.dump(2);
}

}  // namespace funres
