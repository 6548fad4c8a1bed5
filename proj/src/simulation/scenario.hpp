#pragma once

#include "core/dataset.hpp"
#include "models/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace funres {

class RngStream;

/// Covariate drawn from N(mean, sd); sd is a standard deviation.
struct CovariateDist {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
};

/// Derived column holding the product of two generated covariates.
struct ProductColumn {
  std::string name, a, b;
};

/// What a misspecified working model is expected to reveal.
enum class Discrepancy {
  LowessRange,   // LOWESS range of normal-scale point summaries against `probe`
  LowerTailGap,  // Res(0.2) - 0.2 on the Fn-Fn curve
  SupDevRatio,   // Fn-Fn sup deviation, misspecified over correct
};

struct ScenarioSpec {
  std::string name;
  std::string description;
  ModelSpec truth;
  Eigen::VectorXd alpha, beta, gamma;
  /// Variance-to-mean ratio for gamma-mixed Poisson outcomes (1 = plain Poisson).
  double dispersion = 1.0;
  std::vector<CovariateDist> covariates;
  std::vector<ProductColumn> products;
  std::size_t n = 1000;
  std::uint64_t seed = 20240601;

  ModelSpec correct;                     // working model matching the truth
  std::optional<ModelSpec> misspecified;  // working model omitting a component
  Discrepancy discrepancy = Discrepancy::LowessRange;
  std::string probe;       // covariate the misspecification shows up against
  std::string null_probe;  // irrelevant covariate that must not raise an alarm

  /// Upper 99% point of the correct-model Fn-Fn sup deviation at n = 1000
  /// (200-seed pilot starting at `null_seed`); NaN when not calibrated.
  double null_sup_dev = NAN;
  std::uint64_t null_seed = 0;
};

/// All registered scenarios in a fixed order.
const std::vector<ScenarioSpec>& scenario_registry();
/// Throws UnknownScenario.
const ScenarioSpec& find_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// The true data-generating model for a scenario, laid out on `reference`'s columns.
FittedModel true_model(const ScenarioSpec& spec, const Dataset& reference);

/// Stream id derived from the scenario name (FNV-1a), so (name, seed) fixes the data.
std::uint64_t scenario_stream_id(const std::string& name);

/// Covariates then outcomes, drawn from `rng`.
Dataset generate(const ScenarioSpec& spec, std::size_t n, RngStream& rng);
/// Convenience: generate with the stream keyed by (seed, scenario name).
Dataset generate(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed);

/// Y_i ~ Poisson(lambda_i), lambda_i ~ Gamma(shape = mu_i phi, rate = phi):
/// E[Y] = mu, Var[Y] = mu (1 + phi) / phi. mu = 0 yields 0.
std::vector<int> gen_overdispersed(std::span<const double> mu, double phi, RngStream& rng);

/// Writes y followed by the covariate columns.
std::string dataset_csv(const Dataset& data, const std::string& outcome = "y");

}  // namespace funres
