#include "doctest.h"

#include "core/error.hpp"
#include "core/rng.hpp"
#include "diagnostics/diagnostics.hpp"
#include "simulation/criteria.hpp"
#include "simulation/scenario.hpp"
#include "simulation/verify.hpp"

#include <array>
#include <cmath>
#include <vector>

using namespace funres;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

std::pair<double, double> mean_var(const std::vector<int>& y) {
  double s = 0, ss = 0;
  for (int v : y) {
    s += v;
    ss += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(y.size());
  const double m = s / n;
  return {m, (ss - n * m * m) / (n - 1)};
}

}  // namespace

TEST_CASE("registry lookup") {
  CHECK(scenario_names().size() == scenario_registry().size());
  CHECK(find_scenario("hurdle").name == "hurdle");
  CHECK(code_of([] { find_scenario("nope"); }) == ErrorCode::UnknownScenario);
  for (const auto& s : scenario_registry()) {
    CHECK(std::isfinite(s.null_sup_dev));
    if (s.misspecified && s.discrepancy == Discrepancy::LowessRange) CHECK(!s.probe.empty());
  }
}

TEST_CASE("generation is reproducible from name and seed") {
  for (const auto& s : scenario_registry()) {
    const Dataset a = generate(s, 200, 7);
    const Dataset b = generate(s, 200, 7);
    CHECK(a.y() == b.y());
    CHECK(a.x() == b.x());
    CHECK(a.rows() == 200);
    CHECK(a.cols() == s.covariates.size() + s.products.size());
    const Dataset c = generate(s, 200, 8);
    CHECK(c.x() != a.x());
  }
  CHECK(dataset_csv(generate(find_scenario("logistic"), 3, 1)).rfind("y,x\n", 0) == 0);
}

TEST_CASE("covariate and product columns") {
  const auto& s = find_scenario("poisson-missing-interaction");
  const Dataset d = generate(s, 20000, 3);
  const auto x1 = d.column("x1"), x2 = d.column("x2");
  CHECK(x1.mean() == doctest::Approx(0.5).epsilon(0.03));
  CHECK(x2.mean() == doctest::Approx(-1.0).epsilon(0.02));
  const double sd2 = std::sqrt((x2.array() - x2.mean()).square().sum() / (x2.size() - 1));
  CHECK(sd2 == doctest::Approx(0.7).epsilon(0.02));
  CHECK((d.column("x1x2") - x1.cwiseProduct(x2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ordinal example category frequencies") {
  const auto& s = find_scenario("ordinal-quadratic");
  const Dataset d = generate(s, 1000, s.seed);
  std::array<int, 5> counts{};
  for (int y : d.y()) {
    REQUIRE(y >= 0);
    REQUIRE(y <= 4);
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c : counts) {
    CHECK(c / 1000.0 > 0.02);
    CHECK(c / 1000.0 < 0.7);
  }
}

TEST_CASE("hurdle zero probability at x = 0") {
  const auto& s = find_scenario("hurdle");
  const FittedModel truth = true_model(s, generate(s, 5, 1));
  RngStream rng(11, 0);
  const std::array<double, 1> raw{0.0};
  int zeros = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) zeros += truth.sample(raw, rng) == 0;
  CHECK(std::abs(zeros / static_cast<double>(n) - 1.0 / (1.0 + std::exp(-1.0))) < 0.01);
}

TEST_CASE("overdispersed generator moments") {
  RngStream rng(12, 0);
  auto [m, v] = mean_var(gen_overdispersed(std::vector<double>(1000000, 1.0), 1.0 / 6.0, rng));
  CHECK(std::abs(m - 1.0) < 0.01);
  CHECK(std::abs(v - 7.0) < 0.15);

  std::tie(m, v) = mean_var(gen_overdispersed(std::vector<double>(100000, 3.32), 1.0 / 6.0, rng));
  CHECK(v / m > 6.0);
  CHECK(v / m < 8.0);

  std::tie(m, v) = mean_var(gen_overdispersed(std::vector<double>(200000, 2.0), 1e6, rng));
  CHECK(std::abs(v / m - 1.0) < 0.02);

  for (int y : gen_overdispersed(std::vector<double>(50, 0.0), 1.0 / 6.0, rng)) CHECK(y == 0);
  const std::vector<double> one{1.0};
  CHECK(code_of([&] { gen_overdispersed(one, 0.0, rng); }) == ErrorCode::InvalidArgument);
  const std::vector<double> neg{-1.0};
  CHECK(code_of([&] { gen_overdispersed(neg, 1.0, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("conditional mean at fixed x") {
  const auto grid = interior_grid(99);
  const auto& s = find_scenario("logistic");
  const FittedModel truth = true_model(s, generate(s, 5, 1));
  RngStream rng(13, 0);
  const std::array<double, 1> x{1.0};
  CHECK(verify_conditional_mean(truth, x, grid, 100000, rng) < 0.006);

  const auto& o = find_scenario("ordinal-quadratic");
  const FittedModel ord = true_model(o, generate(o, 5, 1));
  const std::array<double, 1> x0{0.0};
  CHECK(verify_conditional_mean(ord, x0, grid, 100000, rng) < 0.006);

  ModelSpec spec = s.truth;
  const FittedModel sure = FittedModel::from_parameters(spec, generate(s, 5, 1), {}, Eigen::Vector2d(-1000, 0));
  CHECK(verify_conditional_mean(sure, x, grid, 1000, rng) == 0.0);
}

TEST_CASE("convergence and the misspecification floor") {
  const std::array<std::size_t, 2> ns{100, 10000};
  const auto rows = verify_convergence(find_scenario("ordinal-quadratic"), false, ns, 10, 500);
  CHECK(rows[0].median / rows[1].median > 2.0);
  CHECK(rows[1].median < 0.012);

  const std::array<std::size_t, 1> big{10000};
  const auto mis = verify_convergence(find_scenario("ordinal-missing-quadratic"), true, big, 5, 500);
  for (double v : mis[0].sup_devs) CHECK(v > 0.02);
  CHECK(code_of([] {
          const std::array<std::size_t, 1> n{100};
          verify_convergence(find_scenario("ordinal-quadratic"), true, n, 1, 1);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("surrogate draws match latent draws") {
  RngStream rng(14, 0);
  for (Link l : {Link::Logit, Link::Probit, Link::Cloglog}) CHECK(verify_surrogate_ks(l, 0.2, 0.7, 50000, rng) < 0.015);
  CHECK(code_of([&] { verify_surrogate_ks(Link::Logit, 0.5, 0.5, 10, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sign residual identity") {
  RngStream rng(15, 0);
  const std::vector<FunctionalResidual> rs{{0, 1, 0}, {0, 0.27, 1}, {0.5, 1, 2}};
  CHECK(sign_residual(rs[0]) == 0.0);
  CHECK(sign_residual(rs[1]) == doctest::Approx(-0.73));
  CHECK(sign_residual(rs[2]) == 0.5);
  const auto check = verify_sign_identity(rs, 100000, rng);
  CHECK(check.max_z < 4.0);
  CHECK(check.max_discrepancy < 4.0 / std::sqrt(12.0 * 100000));
}

TEST_CASE("correct working models stay under the calibrated null") {
  for (const auto& s : scenario_registry()) {
    const Dataset d = generate(s, s.n, s.seed);
    const double sup = fnfn(compute_residuals(fit(s.correct, d), d).residuals).sup_dev;
    CHECK_MESSAGE(sup < s.null_sup_dev, s.name);
  }
}

TEST_CASE("misspecified working models exceed their null counterparts") {
  for (const auto& s : scenario_registry()) {
    if (!s.misspecified) continue;
    const Dataset d = generate(s, s.n, s.seed);
    const FittedModel good = fit(s.correct, d), bad = fit(*s.misspecified, d);
    switch (s.discrepancy) {
      case Discrepancy::LowessRange:
        CHECK_MESSAGE(lowess_range(bad, d, s.probe) >= 3.0 * lowess_range(good, d, s.probe), s.name);
        break;
      case Discrepancy::LowerTailGap:
        CHECK(fnfn(compute_residuals(bad, d).residuals).at(0.2) - 0.2 > 0.05);
        break;
      case Discrepancy::SupDevRatio:
        CHECK(fnfn(compute_residuals(bad, d).residuals).sup_dev >=
              3.0 * fnfn(compute_residuals(good, d).residuals).sup_dev);
        break;
    }
  }
}

TEST_CASE("criteria report") {
  const auto r = run_criterion(6);
  CHECK(r.pass);
  const auto json = criteria_report_json({r});
  CHECK(json.find("\"passed\": 1") != std::string::npos);
  CHECK(code_of([] { run_criterion(10); }) == ErrorCode::InvalidArgument);
}
