#include "doctest.h"

#include "core/distributions.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "models/model.hpp"

#include "json.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace funres;

namespace {

Dataset normal_covariates(std::size_t n, std::vector<std::pair<double, double>> dists, std::uint64_t seed) {
  RngStream r(seed, 99);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dists.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dists.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.normal(dists[j].first, dists[j].second);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < dists.size(); ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(std::vector<int>(n, 0), x, names);
}

Dataset simulate_from(const FittedModel& truth, const Dataset& cov, std::uint64_t seed) {
  RngStream r(seed, 1);
  std::vector<int> y(cov.rows());
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    Eigen::RowVectorXd row = cov.x().row(static_cast<Eigen::Index>(i));
    y[i] = truth.sample(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), r);
  }
  return Dataset(y, cov.x(), cov.names());
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

ModelSpec spec_of(Family f, const std::string& terms, Link l = Link::Logit) {
  ModelSpec s;
  s.family = f;
  s.link = l;
  s.terms = parse_terms(terms);
  return s;
}

}  // namespace

TEST_CASE("binary-logit cumulative probabilities of the worked example") {
  auto cov = normal_covariates(3, {{0, 1}}, 1);
  auto m = FittedModel::from_parameters(spec_of(Family::BinaryLogit, "1 + x1"), cov, {}, vec({-1, 2}));
  double x1 = 1.0, xm1 = -1.0;
  CHECK(m.cumulative_prob(0, {&x1, 1}) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(m.cumulative_prob(0, {&xm1, 1}) == doctest::Approx(0.9525741268224334).epsilon(1e-12));
  CHECK(m.cumulative_prob(-1, {&x1, 1}) == 0.0);
  CHECK(m.cumulative_prob(1, {&x1, 1}) == 1.0);
  CHECK(m.cumulative_prob(0, {&x1, 1}) == doctest::Approx(1.0 - logistic(1.0)));
}

TEST_CASE("poisson cumulative at eta = 1") {
  auto cov = normal_covariates(3, {{0, 1}}, 1);
  auto m = FittedModel::from_parameters(spec_of(Family::Poisson, "1"), cov, {}, vec({1.0}));
  double x = 0.0;
  CHECK(m.cumulative_prob(0, {&x, 1}) == doctest::Approx(0.06598803584531254).epsilon(1e-12));
  CHECK(m.cumulative_prob(-1, {&x, 1}) == 0.0);
}

TEST_CASE("adjacent-category probabilities") {
  auto p = adjacent_category_probs(vec({0.0}), 0.0);
  CHECK(p(0) == doctest::Approx(0.5));
  CHECK(p(1) == doctest::Approx(0.5));
  p = adjacent_category_probs(vec({std::log(3.0)}), 0.0);
  CHECK(p(0) == doctest::Approx(0.75));
  CHECK(p(1) == doctest::Approx(0.25));

  const auto alpha = vec({1.5, 1.5, -1, 1});
  p = adjacent_category_probs(alpha, 0.0);
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int j = 0; j < 4; ++j) CHECK(std::abs(std::log(p(j) / p(j + 1)) - alpha(j)) < 1e-12);

  // Extreme linear predictors stay normalized and finite.
  for (double eta : {-800.0, -50.0, 50.0, 800.0}) {
    p = adjacent_category_probs(alpha, eta);
    CHECK(p.allFinite());
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((p.array() >= 0).all());
  }
  for (double eta : {-3.0, 0.7, 4.0}) {
    p = adjacent_category_probs(alpha, vec({1.5, -1}), vec({eta, eta * eta}));
    for (int j = 0; j < 4; ++j) CHECK(std::abs(std::log(p(j) / p(j + 1)) - (alpha(j) + 1.5 * eta - eta * eta)) < 1e-12);
  }
}

TEST_CASE("hurdle and quasi-poisson cumulative helpers") {
  CHECK(hurdle_cumulative(1.0, 2.0, 0) == 1.0);
  CHECK(hurdle_cumulative(0.3, 2.0, -1) == 0.0);
  const double c = truncated_poisson_cdf(1, 1.7);
  CHECK(hurdle_cumulative(0.5, 1.7, 1) == doctest::Approx(0.5 + 0.5 * c).epsilon(1e-14));

  auto cov = normal_covariates(5, {{0, 1}}, 1);
  ModelSpec s = spec_of(Family::HurdlePoisson, "1 + x1");
  s.zero_terms = parse_terms("1 + x1");
  auto m = FittedModel::from_parameters(s, cov, {}, vec({1, 1}), vec({1, 0.2}));
  double x = 0.0;
  CHECK(m.cumulative_prob(0, {&x, 1}) == doctest::Approx(0.7310585786300049).epsilon(1e-12));

  CHECK(quasipoisson_cumulative(2.0, 1.0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(std::abs(quasipoisson_cumulative(2.0, 7.0, 500) - 1.0) < 1e-9);

  // Mixture-sampling oracle: Gamma(shape = mu/(d-1), rate = 1/(d-1)) mixing gives NB1.
  RngStream r(5, 5);
  const double mu = 2.0, d = 7.0;
  int zeros = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i)
    if (r.poisson(r.gamma(mu / (d - 1), 1.0 / (d - 1))) == 0) ++zeros;
  CHECK(std::abs(quasipoisson_cumulative(mu, d, 0) - static_cast<double>(zeros) / n) < 0.002);
}

TEST_CASE("cumulative probabilities are valid CDFs for every family") {
  auto cov = normal_covariates(20, {{0, 1}, {0.5, 1}}, 3);
  std::vector<FittedModel> models;
  models.push_back(FittedModel::from_parameters(spec_of(Family::BinaryLogit, "1 + x1 + x2"), cov, {}, vec({0.2, 1, -1})));
  models.push_back(FittedModel::from_parameters(spec_of(Family::AdjacentCategory, "x1 + x2"), cov,
                                                vec({1.5, 1.5, -1, 1}), vec({1.5, -1})));
  for (Link l : {Link::Logit, Link::Probit, Link::Cloglog})
    models.push_back(FittedModel::from_parameters(spec_of(Family::CumulativeLink, "x1 + x2", l), cov,
                                                  vec({-1, 0.2, 1.5}), vec({0.8, -0.4})));
  models.push_back(FittedModel::from_parameters(spec_of(Family::Poisson, "1 + x1 + x2"), cov, {}, vec({1, 0.3, 0.2})));
  models.push_back(
      FittedModel::from_parameters(spec_of(Family::QuasiPoisson, "1 + x1 + x2"), cov, {}, vec({1, 0.3, 0.2}), {}, 4.0));
  ModelSpec hs = spec_of(Family::HurdlePoisson, "1 + x1");
  hs.zero_terms = parse_terms("1 + x2");
  models.push_back(FittedModel::from_parameters(hs, cov, {}, vec({1, 1}), vec({1, 0.2})));

  RngStream r(9, 9);
  for (const auto& m : models) {
    for (int k = 0; k < 10; ++k) {
      std::vector<double> raw{r.normal(0, 1.5), r.normal(0, 1.5)};
      double prev = 0.0;
      const int top = is_ordinal(m.spec.family) ? m.max_category : (m.spec.family == Family::BinaryLogit ? 1 : 400);
      for (int y = 0; y <= top; ++y) {
        const double p = m.cumulative_prob(y, raw);
        CHECK(p >= prev - 1e-15);
        CHECK(p <= 1.0);
        prev = p;
      }
      CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));
    }
    if (is_ordinal(m.spec.family)) {
      std::vector<double> raw{0.0, 0.0};
      CHECK(code_of([&] { m.cumulative_prob(m.max_category + 1, raw); }) == ErrorCode::InvalidArgument);
    }
  }
}

TEST_CASE("ordinal score matches finite differences") {
  auto cov = normal_covariates(200, {{0, 1}}, 4);
  cov = cov.with_column("x1sq", cov.column("x1").array().square().matrix());
  const auto truth = FittedModel::from_parameters(spec_of(Family::AdjacentCategory, "x1 + x1sq"), cov,
                                                  vec({1.5, 1.5, -1, 1}), vec({1.5, -1}));
  const auto data = simulate_from(truth, cov, 4);
  RngStream r(123, 0);
  for (Family f : {Family::AdjacentCategory, Family::CumulativeLink}) {
    for (Link l : {Link::Logit, Link::Probit, Link::Cloglog}) {
      if (f == Family::AdjacentCategory && l != Link::Logit) continue;
      auto spec = spec_of(f, "x1 + x1sq", l);
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd th(6);
        if (f == Family::AdjacentCategory) {
          for (int k = 0; k < 6; ++k) th(k) = r.normal(0, 1);
        } else {
          th(0) = r.normal(-1.5, 0.3);
          for (int k = 1; k < 4; ++k) th(k) = th(k - 1) + 0.3 + r.uniform();
          th(4) = r.normal(0, 0.5);
          th(5) = r.normal(0, 0.3);
        }
        const auto o = ordinal_log_likelihood(spec, data, 4, th);
        for (int k = 0; k < 6; ++k) {
          const double h = 1e-5 * std::max(1.0, std::abs(th(k)));
          Eigen::VectorXd a = th, b = th;
          a(k) += h;
          b(k) -= h;
          const auto oa = ordinal_log_likelihood(spec, data, 4, a);
          const auto ob = ordinal_log_likelihood(spec, data, 4, b);
          const double fd = (oa.value - ob.value) / (2 * h);
          CHECK(std::abs(fd - o.gradient(k)) <= 1e-5 * std::max(1.0, std::abs(o.gradient(k))));
          const Eigen::VectorXd fdh = (oa.gradient - ob.gradient) / (2 * h);
          CHECK((fdh - o.hessian.col(k)).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, o.hessian.col(k).cwiseAbs().maxCoeff()));
        }
      }
    }
  }
}

TEST_CASE("binary-logit recovers the worked-example coefficients") {
  auto cov = normal_covariates(100000, {{0, 1}}, 11);
  auto truth = FittedModel::from_parameters(spec_of(Family::BinaryLogit, "1 + x1"), cov, {}, vec({-1, 2}));
  auto data = simulate_from(truth, cov, 11);
  auto m = fit(spec_of(Family::BinaryLogit, "1 + x1"), data);
  CHECK(m.converged);
  CHECK(std::abs(m.beta(0) + 1) < 0.05);
  CHECK(std::abs(m.beta(1) - 2) < 0.05);
  CHECK(m.gradient_norm < 1e-8);
}

TEST_CASE("poisson intercept-only MLE is the log sample mean") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(5, 1, 3.0);
  Dataset d({3, 3, 3, 3, 3}, x, {"x"});
  auto m = fit(spec_of(Family::Poisson, "1"), d);
  CHECK(m.converged);
  CHECK(m.beta(0) == doctest::Approx(std::log(3.0)).epsilon(1e-10));
}

TEST_CASE("adjacent-category fit on the correctly specified ordinal example") {
  auto cov = normal_covariates(1000, {{0, 1}}, 2024);
  cov = cov.with_column("x1sq", cov.column("x1").array().square().matrix());
  auto spec = spec_of(Family::AdjacentCategory, "x1 + x1sq");
  auto truth = FittedModel::from_parameters(spec, cov, vec({1.5, 1.5, -1, 1}), vec({1.5, -1}));
  auto data = simulate_from(truth, cov, 2024);
  auto m = fit(spec, data);
  CHECK(m.converged);
  CHECK(m.gradient_norm < 1e-8);
  const auto se = m.standard_errors();
  CHECK(std::abs(m.beta(0) - 1.5) < 3 * se(4));
  CHECK(std::abs(m.beta(1) + 1.0) < 3 * se(5));
  CHECK(m.aic() == doctest::Approx(-2 * m.loglik + 12));
  CHECK(code_of([&] { fit(spec_of(Family::AdjacentCategory, "1 + x1"), data); }) == ErrorCode::RankDeficient);
}

TEST_CASE("fits are invariant under row reordering") {
  auto cov = normal_covariates(600, {{0, 1}}, 8);
  auto spec = spec_of(Family::CumulativeLink, "x1", Link::Probit);
  auto truth = FittedModel::from_parameters(spec, cov, vec({-1, 0, 1}), vec({0.7}));
  auto data = simulate_from(truth, cov, 8);
  std::vector<std::size_t> perm(data.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 217, perm.end());
  auto a = fit(spec, data);
  auto b = fit(spec, data.select_rows(perm));
  CHECK((a.estimates() - b.estimates()).cwiseAbs().maxCoeff() < 1e-6);
  for (int j = 1; j < a.alpha.size(); ++j) CHECK(a.alpha(j) > a.alpha(j - 1));

  auto pspec = spec_of(Family::Poisson, "1 + x1");
  auto ptruth = FittedModel::from_parameters(pspec, cov, {}, vec({0.5, 0.4}));
  auto pdata = simulate_from(ptruth, cov, 8);
  auto pa = fit(pspec, pdata);
  auto pb = fit(pspec, pdata.select_rows(perm));
  CHECK((pa.estimates() - pb.estimates()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("self-consistency: refit recovers simulated coefficients within 4 SEs") {
  auto cov = normal_covariates(100000, {{0, 1}, {-1, 0.8}}, 31);
  struct Case {
    ModelSpec spec;
    Eigen::VectorXd alpha, beta, gamma;
  };
  std::vector<Case> cases;
  cases.push_back({spec_of(Family::AdjacentCategory, "x1 + x2"), vec({-1, -2, 0.5, 2}), vec({1.5, 1}), {}});
  cases.push_back({spec_of(Family::CumulativeLink, "x1 + x2", Link::Cloglog), vec({-1, 0.5, 1.2}), vec({0.6, -0.3}), {}});
  cases.push_back({spec_of(Family::Poisson, "1 + x1 + x2"), {}, vec({0.5, 0.25, 0.5}), {}});
  ModelSpec hs = spec_of(Family::HurdlePoisson, "1 + x1");
  hs.zero_terms = parse_terms("1 + x1");
  cases.push_back({hs, {}, vec({1, 1}), vec({1, 0.2})});
  for (const auto& c : cases) {
    auto truth = FittedModel::from_parameters(c.spec, cov, c.alpha, c.beta, c.gamma);
    auto data = simulate_from(truth, cov, 77);
    auto m = fit(c.spec, data);
    CHECK(m.converged);
    const auto est = m.estimates();
    const auto want = truth.estimates();
    const auto se = m.standard_errors();
    for (Eigen::Index k = 0; k < est.size(); ++k) CHECK(std::abs(est(k) - want(k)) < 4 * se(k));
  }
}

TEST_CASE("quasi-poisson reuses poisson beta and estimates Pearson dispersion") {
  auto cov = normal_covariates(5000, {{0, 1}}, 13);
  RngStream r(13, 2);
  std::vector<int> y(cov.rows());
  const double phi = 1.0 / 6.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) {
    const double mu = std::exp(1.2 + 1.3 * cov.x()(static_cast<Eigen::Index>(i), 0));
    y[i] = r.poisson(r.gamma(mu * phi, phi));
  }
  Dataset data(y, cov.x(), cov.names());
  auto p = fit(spec_of(Family::Poisson, "1 + x1"), data);
  auto q = fit(spec_of(Family::QuasiPoisson, "1 + x1"), data);
  CHECK((p.beta - q.beta).norm() == 0.0);
  CHECK(q.dispersion > 5.0);
  CHECK(q.dispersion < 9.0);
  CHECK(std::isnan(q.aic()));
  CHECK(q.standard_errors()(1) == doctest::Approx(p.standard_errors()(1) * std::sqrt(q.dispersion)));
}

TEST_CASE("fit errors") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  Dataset d({0, 1, 0, 1}, x, {"a", "b"});
  CHECK(code_of([&] { fit(spec_of(Family::Poisson, "1 + a + b"), d); }) == ErrorCode::RankDeficient);
  // Perfectly separated binary outcome.
  Eigen::MatrixXd xs(6, 1);
  xs << -3, -2, -1, 1, 2, 3;
  Dataset s({0, 0, 0, 1, 1, 1}, xs, {"x"});
  CHECK(code_of([&] { fit(spec_of(Family::BinaryLogit, "1 + x"), s); }) == ErrorCode::Separation);
  Dataset big({0, 2, 1, 1}, x, {"a", "b"});
  CHECK(code_of([&] { fit(spec_of(Family::BinaryLogit, "1 + a"), big); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("non-convergence is reported through the flag") {
  auto cov = normal_covariates(500, {{0, 1}}, 5);
  auto spec = spec_of(Family::Poisson, "1 + x1");
  auto data = simulate_from(FittedModel::from_parameters(spec, cov, {}, vec({1, 0.5})), cov, 5);
  FitOptions o;
  o.max_iterations = 1;
  auto m = fit(spec, data, o);
  CHECK_FALSE(m.converged);
  CHECK(m.iterations == 1);
}

TEST_CASE("summary json carries the documented fields") {
  auto cov = normal_covariates(300, {{0, 1}}, 6);
  auto spec = spec_of(Family::Poisson, "1 + x1");
  auto data = simulate_from(FittedModel::from_parameters(spec, cov, {}, vec({1, 0.5})), cov, 6);
  auto j = nlohmann::json::parse(fit(spec, data).summary_json());
  for (const char* key : {"family", "terms", "coefficients", "loglik", "aic", "dispersion", "convergence"})
    CHECK(j.contains(key));
  CHECK(j["coefficients"].size() == 2);
}
