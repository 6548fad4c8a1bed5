#include "simulation/scenario.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

#include <charconv>
#include <cmath>

namespace funres {

namespace {

ModelSpec model(Family f, const std::string& terms, int max_category = 0) {
  ModelSpec s;
  s.family = f;
  s.terms = parse_terms(terms);
  s.max_category = max_category;
  return s;
}

ModelSpec hurdle(const std::string& terms, const std::string& zero_terms) {
  ModelSpec s = model(Family::HurdlePoisson, terms);
  s.zero_terms = parse_terms(zero_terms);
  return s;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

ScenarioSpec adjacent(std::string name, std::string description, const std::string& truth_terms,
                      Eigen::VectorXd alpha, Eigen::VectorXd beta, std::vector<CovariateDist> covs) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.truth = model(Family::AdjacentCategory, truth_terms, 4);
  s.alpha = std::move(alpha);
  s.beta = std::move(beta);
  s.covariates = std::move(covs);
  s.correct = s.truth;
  return s;
}

ScenarioSpec poisson(std::string name, std::string description, const std::string& truth_terms, Eigen::VectorXd beta,
                     std::vector<CovariateDist> covs) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.truth = model(Family::Poisson, truth_terms);
  s.beta = std::move(beta);
  s.covariates = std::move(covs);
  s.correct = s.truth;
  return s;
}

std::vector<ScenarioSpec> build_registry() {
  std::vector<ScenarioSpec> r;

  {
    ScenarioSpec s;
    s.name = "logistic";
    s.description = "binary logistic regression, logit Pr{Y=1} = -1 + 2x";
    s.truth = model(Family::BinaryLogit, "1 + x");
    s.beta = vec({-1, 2});
    s.covariates = {{"x", 0, 1}};
    s.correct = s.truth;
    r.push_back(s);
  }

  const Eigen::VectorXd ex1_alpha = vec({1.5, 1.5, -1, 1});
  const Eigen::VectorXd ex1_beta = vec({1.5, -1});
  r.push_back(adjacent("ordinal-quadratic", "adjacent-category logit with a quadratic effect, fitted correctly",
                       "x + x^2", ex1_alpha, ex1_beta, {{"x", 0, 1}}));
  {
    auto s = adjacent("ordinal-missing-quadratic", "adjacent-category logit; working model omits x^2", "x + x^2",
                      ex1_alpha, ex1_beta, {{"x", 0, 1}});
    s.misspecified = model(Family::AdjacentCategory, "x", 4);
    s.probe = "x";
    r.push_back(s);
  }
  {
    auto s = adjacent("ordinal-missing-cubic", "adjacent-category logit; working model omits x^3", "x + x^2 + x^3",
                      vec({-1, 1.5, 2, 3}), vec({2, -1, -1.5}), {{"x", 0, 1}});
    s.misspecified = model(Family::AdjacentCategory, "x + x^2", 4);
    s.probe = "x";
    r.push_back(s);
  }
  {
    auto s = adjacent("ordinal-missing-covariate", "adjacent-category logit; working model omits x2",
                      "x1 + x2 + x3", vec({-1, -2, 0.5, 2}), vec({1.5, 1, 0}),
                      {{"x1", 0, 1}, {"x2", -1, 0.8}, {"x3", 0.5, 1}});
    s.misspecified = model(Family::AdjacentCategory, "x1", 4);
    s.probe = "x2";
    s.null_probe = "x3";
    r.push_back(s);
  }
  {
    auto s = adjacent("ordinal-missing-interaction", "adjacent-category logit; working model omits x1:x2",
                      "x1 + x2 + x1:x2", vec({-1, -2, 0.5, 2}), vec({1, 2, 2}), {{"x1", 0, 1}, {"x2", -1, 0.8}});
    s.products = {{"x1x2", "x1", "x2"}};
    s.misspecified = model(Family::AdjacentCategory, "x1 + x2", 4);
    s.probe = "x1x2";
    r.push_back(s);
  }

  const Eigen::VectorXd pq_beta = vec({1, 0.2, 0.15});
  r.push_back(poisson("poisson-quadratic", "Poisson log-linear with a quadratic effect, fitted correctly",
                      "1 + x + x^2", pq_beta, {{"x", 0, 1}}));
  {
    auto s = poisson("poisson-missing-quadratic", "Poisson log-linear; working model omits x^2", "1 + x + x^2",
                     pq_beta, {{"x", 0, 1}});
    s.misspecified = model(Family::Poisson, "1 + x");
    s.probe = "x";
    r.push_back(s);
  }
  {
    auto s = poisson("poisson-missing-cubic", "Poisson log-linear; working model omits x^3", "1 + x + x^2 + x^3",
                     vec({0.8, -0.2, 0.5, -0.5}), {{"x", 0, 0.5}});
    s.misspecified = model(Family::Poisson, "1 + x + x^2");
    s.probe = "x";
    r.push_back(s);
  }
  {
    auto s = poisson("poisson-missing-covariate", "Poisson log-linear; working model omits x2", "1 + x1 + x2 + x3",
                     vec({0.5, 0.25, 0.5, 0}), {{"x1", 0, 0.8}, {"x2", -1, 1}, {"x3", 0.8, 0.9}});
    s.misspecified = model(Family::Poisson, "1 + x1");
    s.probe = "x2";
    s.null_probe = "x3";
    r.push_back(s);
  }
  {
    auto s = poisson("poisson-missing-interaction", "Poisson log-linear; working model omits x1:x2",
                     "1 + x1 + x2 + x1:x2", vec({-0.1, 0.8, -0.5, 0.6}), {{"x1", 0.5, 1}, {"x2", -1, 0.7}});
    s.products = {{"x1x2", "x1", "x2"}};
    s.misspecified = model(Family::Poisson, "1 + x1 + x2");
    s.probe = "x1x2";
    r.push_back(s);
  }
  {
    ScenarioSpec s;
    s.name = "hurdle";
    s.description = "hurdle Poisson, logit Pr{Y=0} = 1 + 0.2x, truncated Poisson log mean 1 + x";
    s.truth = hurdle("1 + x", "1 + x");
    s.beta = vec({1, 1});
    s.gamma = vec({1, 0.2});
    s.covariates = {{"x", 0, 0.8}};
    s.correct = s.truth;
    s.misspecified = model(Family::Poisson, "1 + x");
    s.discrepancy = Discrepancy::LowerTailGap;
    r.push_back(s);
  }
  {
    ScenarioSpec s;
    s.name = "overdispersed";
    s.description = "gamma-mixed Poisson, log mean 1.2 + 1.3x, variance-to-mean ratio 7";
    s.truth = model(Family::QuasiPoisson, "1 + x");
    s.beta = vec({1.2, 1.3});
    s.dispersion = 7.0;
    s.covariates = {{"x", 0, 1}};
    s.correct = s.truth;
    s.misspecified = model(Family::Poisson, "1 + x");
    s.discrepancy = Discrepancy::SupDevRatio;
    r.push_back(s);
  }

  // 99th percentile of the correct-model sup deviation at n = 1000 over seeds
  // null_seed .. null_seed + 199 (tools/calibrate_nulls).
  const std::vector<std::pair<std::string, double>> nulls = {
      {"logistic", 0.0046},
      {"ordinal-quadratic", 0.0127},
      {"ordinal-missing-quadratic", 0.0132},
      {"ordinal-missing-cubic", 0.0112},
      {"ordinal-missing-covariate", 0.0112},
      {"ordinal-missing-interaction", 0.0094},
      {"poisson-quadratic", 0.0253},
      {"poisson-missing-quadratic", 0.0261},
      {"poisson-missing-cubic", 0.0257},
      {"poisson-missing-covariate", 0.0214},
      {"poisson-missing-interaction", 0.0226},
      {"hurdle", 0.0125},
      {"overdispersed", 0.0507},
  };
  for (auto& s : r) {
    s.null_seed = 1000;
    for (const auto& [name, v] : nulls)
      if (name == s.name) s.null_sup_dev = v;
  }
  return r;
}

}  // namespace

const std::vector<ScenarioSpec>& scenario_registry() {
  static const std::vector<ScenarioSpec> registry = build_registry();
  return registry;
}

const ScenarioSpec& find_scenario(const std::string& name) {
  for (const auto& s : scenario_registry())
    if (s.name == name) return s;
  fail(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& s : scenario_registry()) out.push_back(s.name);
  return out;
}

FittedModel true_model(const ScenarioSpec& spec, const Dataset& reference) {
  return FittedModel::from_parameters(spec.truth, reference, spec.alpha, spec.beta, spec.gamma, spec.dispersion);
}

std::uint64_t scenario_stream_id(const std::string& name) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<int> gen_overdispersed(std::span<const double> mu, double phi, RngStream& rng) {
  if (!(phi > 0) || !std::isfinite(phi)) fail(ErrorCode::InvalidArgument, "phi must be positive and finite");
  std::vector<int> y(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(mu[i] >= 0) || !std::isfinite(mu[i])) fail(ErrorCode::InvalidArgument, "mu must be non-negative");
    y[i] = mu[i] == 0 ? 0 : rng.poisson(rng.gamma(mu[i] * phi, phi));
  }
  return y;
}

Dataset generate(const ScenarioSpec& spec, std::size_t n, RngStream& rng) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "n must be positive");
  const auto nc = static_cast<Eigen::Index>(spec.covariates.size());
  const auto np = static_cast<Eigen::Index>(spec.products.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), nc + np);
  std::vector<std::string> names;
  for (const auto& c : spec.covariates) names.push_back(c.name);
  for (const auto& p : spec.products) names.push_back(p.name);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto& c = spec.covariates[static_cast<std::size_t>(j)];
      x(i, j) = rng.normal(c.mean, c.sd);
    }
  Dataset shell(std::vector<int>(n, 0), x, names);
  for (Eigen::Index k = 0; k < np; ++k) {
    const auto& p = spec.products[static_cast<std::size_t>(k)];
    x.col(nc + k) = shell.column(p.a).cwiseProduct(shell.column(p.b));
  }
  shell = Dataset(std::vector<int>(n, 0), x, names);

  const FittedModel truth = true_model(spec, shell);
  std::vector<int> y(n);
  std::vector<double> raw(static_cast<std::size_t>(x.cols()));
  if (spec.truth.family == Family::QuasiPoisson) {
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) raw[static_cast<std::size_t>(j)] = x(static_cast<Eigen::Index>(i), j);
      mu[i] = truth.mean(raw);
    }
    y = gen_overdispersed(mu, 1.0 / (spec.dispersion - 1.0), rng);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) raw[static_cast<std::size_t>(j)] = x(static_cast<Eigen::Index>(i), j);
      y[i] = truth.sample(raw, rng);
    }
  }
  return Dataset(std::move(y), std::move(x), std::move(names));
}

Dataset generate(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, scenario_stream_id(spec.name));
  return generate(spec, n, rng);
}

std::string dataset_csv(const Dataset& data, const std::string& outcome) {
  auto num = [](std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
  };
  std::string out = outcome;
  for (const auto& name : data.names()) out += "," + name;
  out += '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out += std::to_string(data.y()[i]);
    for (std::size_t j = 0; j < data.cols(); ++j) {
      out += ',';
      num(out, data.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

}  // namespace funres
