#include "doctest.h"

#include "core/distributions.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "residuals/residual.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <vector>

using namespace funres;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

Dataset grid_data(std::vector<int> y, std::vector<double> x) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
  return Dataset(std::move(y), m, {"x"});
}

FittedModel worked_example() {
  ModelSpec s;
  s.family = Family::BinaryLogit;
  s.terms = parse_terms("1 + x");
  return FittedModel::from_parameters(s, grid_data({0, 1}, {0.0, 1.0}), {}, vec({-1, 2}));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

double brute_mean(const std::vector<FunctionalResidual>& rs, double t) {
  long double s = 0;
  for (const auto& r : rs) s += eval(r, t);
  return static_cast<double>(s / rs.size());
}

}  // namespace

TEST_CASE("worked example intervals") {
  const auto m = worked_example();
  double x = 1.0;
  auto r = functional_residual(m, 0, {&x, 1});
  CHECK(r.lo == 0.0);
  CHECK(r.hi == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  x = -1.0;
  r = functional_residual(m, 1, {&x, 1});
  CHECK(r.lo == doctest::Approx(0.9525741268224334).epsilon(1e-12));
  CHECK(r.hi == 1.0);
}

TEST_CASE("degenerate support gives (0, 1)") {
  ModelSpec s;
  s.family = Family::Poisson;
  s.terms = parse_terms("1");
  // Mean effectively zero: Y = 0 is the only possible outcome.
  auto m = FittedModel::from_parameters(s, grid_data({0}, {0.0}), {}, vec({-800}));
  double x = 0;
  auto r = functional_residual(m, 0, {&x, 1});
  CHECK(r.lo == 0.0);
  CHECK(r.hi == 1.0);
}

TEST_CASE("eval") {
  FunctionalResidual r{0, 0.27};
  CHECK(eval(r, 0.135) == doctest::Approx(0.5));
  CHECK(eval(r, 0.5) == 1.0);
  CHECK(eval({0.2, 0.8}, 0.2) == 0.0);
  RngStream g(3, 3);
  for (int k = 0; k < 200; ++k) {
    double a = g.uniform(), b = g.uniform();
    if (a > b) std::swap(a, b);
    FunctionalResidual q{a, b};
    CHECK(eval(q, a) == 0.0);
    CHECK(eval(q, b) == 1.0);
    double prev = 0;
    for (double t = 0; t <= 1.0; t += 0.01) {
      CHECK(eval(q, t) >= prev);
      prev = eval(q, t);
    }
  }
}

TEST_CASE("densities") {
  CHECK(density({0, 0.27}, 0.1) == doctest::Approx(1 / 0.27));
  CHECK(density({0, 0.27}, 0.3) == 0.0);
  for (double t : {0.01, 0.3, 0.99}) CHECK(density({0, 1}, t) == 1.0);

  using boost::math::quadrature::gauss_kronrod;
  for (auto r : {FunctionalResidual{0, 0.27}, FunctionalResidual{0.2, 0.7}, FunctionalResidual{0.99, 1.0},
                 FunctionalResidual{0.0, 1.0}, FunctionalResidual{0.4999, 0.5001}}) {
    const double a = r.lo <= 0 ? -40.0 : std_normal_quantile(r.lo);
    const double b = r.hi >= 1 ? 40.0 : std_normal_quantile(r.hi);
    const double mass = gauss_kronrod<double, 61>::integrate(
        [&](double z) { return density_normal_scale(r, z); }, a, b, 15, 1e-12);
    CHECK(std::abs(mass - 1.0) < 1e-6);
  }
}

TEST_CASE("to_normal_scale") {
  auto [a, b] = to_normal_scale({0.99, 0.999});
  CHECK(a == doctest::Approx(2.326).epsilon(1e-3));
  CHECK(b == doctest::Approx(3.090).epsilon(1e-3));
  auto [c, d] = to_normal_scale({0.0, 0.27});
  CHECK(c == doctest::Approx(-6.3613).epsilon(1e-4));
  CHECK(d == doctest::Approx(-0.6128).epsilon(1e-3));
  auto [e, f] = to_normal_scale({0.5, 0.5 + 1e-12});
  CHECK(std::abs(0.5 * (e + f)) < 1e-10);
  auto [g, h] = to_normal_scale({0.3, 1.0});
  CHECK(std::isfinite(h));
  (void)g;
}

TEST_CASE("sign residual") {
  CHECK(sign_residual({0, 1}) == 0.0);
  CHECK(sign_residual({0, 0.27}) == doctest::Approx(-0.73));
  CHECK(sign_residual({0.9526, 1}) == doctest::Approx(0.9526));
  CHECK(sign_residual({0.5, 1}) == doctest::Approx(0.5));
  // Monte Carlo oracle: 2 * mean of uniform draws - 1.
  RngStream g(1, 2);
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += 0.27 * g.uniform();
  CHECK(std::abs((2 * s / n - 1) - (-0.73)) < 4 * 0.27 / std::sqrt(12.0 * n) * 2);
  // 2 * int t d eval - 1 by quadrature on random intervals.
  using boost::math::quadrature::gauss_kronrod;
  for (int k = 0; k < 50; ++k) {
    double a = g.uniform(), b = g.uniform();
    if (a > b) std::swap(a, b);
    FunctionalResidual r{a, b};
    const double m = gauss_kronrod<double, 31>::integrate([&](double t) { return t * density(r, t); }, a, b);
    CHECK(std::abs(2 * m - 1 - sign_residual(r)) < 1e-12);
  }
}

TEST_CASE("point summaries") {
  CHECK(point_summary({0, 1}, Scale::Uniform) == 0.5);
  CHECK(std::abs(point_summary({0, 1}, Scale::Normal)) < 1e-15);
  CHECK(std::abs(point_summary({0.2, 0.8}, Scale::Normal)) < 1e-12);
  // Matches the mean of the transformed density by quadrature.
  using boost::math::quadrature::gauss_kronrod;
  for (auto r : {FunctionalResidual{0, 0.27}, FunctionalResidual{0.9, 0.99}, FunctionalResidual{0.31, 0.32}}) {
    const double a = r.lo <= 0 ? -40.0 : std_normal_quantile(r.lo);
    const double b = r.hi >= 1 ? 40.0 : std_normal_quantile(r.hi);
    const double m = gauss_kronrod<double, 61>::integrate([&](double z) { return z * density_normal_scale(r, z); }, a,
                                                          b, 15, 1e-12);
    CHECK(point_summary(r, Scale::Normal) == doctest::Approx(m).epsilon(1e-9));
  }
  // Narrow intervals fall back to the quantile of the midpoint.
  CHECK(point_summary({0.5, 0.5 + 1e-12}, Scale::Normal) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("surrogate draws") {
  RngStream g(17, 4);
  std::vector<double> v(100000);
  for (auto& d : v) d = surrogate_draw({0, 1}, Link::Logit, g);
  CHECK(ks_one_sample(v, [](double z) { return logistic(z); }) < 0.01);

  // Rejection oracle: untruncated normal draws kept inside the cell.
  const double a = std_normal_quantile(0.2), b = std_normal_quantile(0.7);
  std::vector<double> oracle;
  RngStream h(18, 4);
  while (oracle.size() < 100000) {
    const double z = h.normal();
    if (z > a && z <= b) oracle.push_back(z);
  }
  for (auto& d : v) d = surrogate_draw({0.2, 0.7}, Link::Probit, g);
  CHECK(ks_two_sample(v, oracle) < 0.01);

  CHECK(std::abs(surrogate_draw({0.5, 0.5 + 1e-12}, Link::Probit, g)) < 1e-9);

  ModelSpec s;
  s.family = Family::AdjacentCategory;
  s.terms = parse_terms("x");
  auto m = FittedModel::from_parameters(s, grid_data({0, 1}, {0, 1}), vec({0.0}), vec({1.0}));
  CHECK(code_of([&] { surrogate_draw({0, 1}, m, g); }) == ErrorCode::UnsupportedFamily);
}

TEST_CASE("classical residuals") {
  ModelSpec s;
  s.family = Family::Poisson;
  s.terms = parse_terms("1");
  auto m = FittedModel::from_parameters(s, grid_data({0}, {0}), {}, vec({std::log(2.0)}));
  double x = 0;
  CHECK(pearson_residual(m, 0, {&x, 1}) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(deviance_residual(m, 0, {&x, 1}) == doctest::Approx(-2.0));
  CHECK(pearson_residual(m, 2, {&x, 1}) == doctest::Approx(0.0));
  CHECK(deviance_residual(m, 2, {&x, 1}) == 0.0);
  // The y = 0 branch is the limit of the general expression as y -> 0.
  const double y = 1e-9, mu = 2.0;
  CHECK(std::sqrt(2 * (y * std::log(y / mu) - (y - mu))) == doctest::Approx(2.0).epsilon(1e-6));

  ModelSpec b;
  b.family = Family::BinaryLogit;
  b.terms = parse_terms("1");
  auto mb = FittedModel::from_parameters(b, grid_data({0}, {0}), {}, vec({0.0}));
  CHECK(pearson_residual(mb, 1, {&x, 1}) == doctest::Approx(1.0));
  CHECK(deviance_residual(mb, 1, {&x, 1}) == doctest::Approx(std::sqrt(2 * std::log(2.0))));

  ModelSpec o;
  o.family = Family::AdjacentCategory;
  o.terms = parse_terms("x");
  auto mo = FittedModel::from_parameters(o, grid_data({0, 1}, {0, 1}), vec({0.0}), vec({1.0}));
  CHECK(code_of([&] { pearson_residual(mo, 1, {&x, 1}); }) == ErrorCode::UnsupportedFamily);
  CHECK(code_of([&] { deviance_residual(mo, 1, {&x, 1}); }) == ErrorCode::UnsupportedFamily);
}

TEST_CASE("average curve examples") {
  std::vector<FunctionalResidual> one{{0, 1}};
  auto c = average_curve(one);
  for (double t : {0.0, 0.1, 0.5, 0.93, 1.0}) CHECK(c(t) == doctest::Approx(t));
  CHECK(c.sup_deviation() == 0.0);

  std::vector<FunctionalResidual> two{{0, 0.5}, {0.5, 1}};
  c = average_curve(two);
  CHECK(c(0.25) == doctest::Approx(0.25));
  CHECK(c(0.5) == doctest::Approx(0.5));
  CHECK(c(0.75) == doctest::Approx(0.75));
  CHECK(c.exact());

  // Single observation: the sup deviation is max(lo, 1 - hi).
  std::vector<FunctionalResidual> s{{0.3, 0.6}};
  CHECK(average_curve(s).sup_deviation() == doctest::Approx(0.4));

  auto grid = average_curve_grid(two, 512);
  CHECK(grid.knots().size() == 512);
  CHECK_FALSE(grid.exact());
  CHECK(code_of([] { average_curve(std::vector<FunctionalResidual>{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("average curve is exact against brute force") {
  RngStream g(2024, 12);
  for (int set = 0; set < 40; ++set) {
    const int n = 1 + static_cast<int>(g.uniform() * 400);
    std::vector<FunctionalResidual> rs;
    for (int i = 0; i < n; ++i) {
      double a = g.uniform(), b = g.uniform();
      if (a > b) std::swap(a, b);
      const double kind = g.uniform();
      if (kind < 0.15) b = std::min(1.0, a + 1e-11 * (1 + g.uniform()));  // very narrow
      else if (kind < 0.25) a = 0.0;
      else if (kind < 0.35) b = 1.0;
      if (b <= a) continue;
      rs.push_back({a, b});
    }
    if (rs.empty()) continue;
    const auto c = average_curve(rs);
    double prev = 0;
    for (std::size_t k = 0; k < c.knots().size(); ++k) {
      CHECK(c.values()[k] >= prev);
      prev = c.values()[k];
    }
    CHECK(c(0.0) == 0.0);
    CHECK(c(1.0) == 1.0);
    for (int k = 0; k < 300; ++k) {
      const double t = g.uniform();
      CHECK(std::abs(c(t) - brute_mean(rs, t)) < 1e-12);
    }
    for (std::size_t k = 0; k < c.knots().size(); k += 7)
      CHECK(std::abs(c.values()[k] - brute_mean(rs, c.knots()[k])) < 1e-12);
  }
}

TEST_CASE("compute_residuals excludes impossible outcomes and exports csv") {
  ModelSpec s;
  s.family = Family::Poisson;
  s.terms = parse_terms("1 + x");
  auto data = grid_data({0, 3, 400, 1}, {0.0, 0.5, 1.0, -1.0});
  auto m = FittedModel::from_parameters(s, data, {}, vec({0.2, 0.3}));
  auto set = compute_residuals(m, data);
  CHECK(set.residuals.size() == 3);
  REQUIRE(set.excluded.size() == 1);
  CHECK(set.excluded[0] == 2);
  CHECK(set.residuals[2].index == 3);
  const auto csv = residual_csv(set);
  CHECK(csv.rfind("index,y,lo,hi,z_lo,z_hi,point_uniform,point_normal,sign_residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
