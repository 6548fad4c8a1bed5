#pragma once

#include "models/model.hpp"
#include "residuals/residual.hpp"
#include "simulation/scenario.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace funres {

class RngStream;

/// t = k / (points + 1), k = 1..points.
std::vector<double> interior_grid(int points = 99);

/// Simulates Y N times at fixed x from `truth` and returns max_t |mean eval(res, t) - t|.
double verify_conditional_mean(const FittedModel& truth, std::span<const double> raw, std::span<const double> t_grid,
                       std::size_t replications, RngStream& rng);

/// Fn-Fn sup deviation of true-model residuals on a fresh sample of size n.
double verify_unconditional_mean(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed);

struct ConvergenceRow {
  std::size_t n = 0;
  double median = 0.0;
  std::vector<double> sup_devs;  // one per seed
};

/// Median Fn-Fn sup deviation of the fitted working model over seeds
/// base_seed .. base_seed + seeds - 1, for each n.
std::vector<ConvergenceRow> verify_convergence(const ScenarioSpec& spec, bool misspecified, std::span<const std::size_t> ns,
                                            int seeds, std::uint64_t base_seed);

/// Two-sample KS distance between `draws` surrogate draws from (lo, hi) and the same
/// number of latent errors sampled directly and kept when lo < G(e) <= hi.
double verify_surrogate_ks(Link link, double lo, double hi, std::size_t draws, RngStream& rng);

struct SignIdentityCheck {
  double max_discrepancy = 0.0;  // max |sign_residual - (2 mean - 1)|
  double max_z = 0.0;            // max |midpoint - mean| in units of (hi - lo) / sqrt(12 draws)
};

/// Monte Carlo mean of U(lo, hi) draws against the closed-form sign residual.
SignIdentityCheck verify_sign_identity(std::span<const FunctionalResidual> residuals, std::size_t draws, RngStream& rng);

/// Range of the LOWESS fit of normal-scale point summaries against `column`.
double lowess_range(const FittedModel& model, const Dataset& data, const std::string& column);

/// Runs `body(i)` for i in [0, count) across hardware threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace funres
