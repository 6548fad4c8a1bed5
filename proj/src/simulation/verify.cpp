#include "simulation/verify.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "diagnostics/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace funres {

std::vector<double> interior_grid(int points) {
  std::vector<double> t(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k) t[static_cast<std::size_t>(k - 1)] = k / static_cast<double>(points + 1);
  return t;
}

double verify_conditional_mean(const FittedModel& truth, std::span<const double> raw, std::span<const double> t_grid,
                       std::size_t replications, RngStream& rng) {
  if (replications == 0) fail(ErrorCode::InvalidArgument, "replications must be positive");
  std::map<int, std::size_t> counts;
  for (std::size_t r = 0; r < replications; ++r) ++counts[truth.sample(raw, rng)];
  std::vector<std::pair<FunctionalResidual, double>> cells;
  for (const auto& [y, c] : counts)
    cells.emplace_back(functional_residual(truth, y, raw), static_cast<double>(c) / static_cast<double>(replications));
  double worst = 0.0;
  for (double t : t_grid) {
    double m = 0.0;
    for (const auto& [res, w] : cells) m += w * eval(res, t);
    worst = std::max(worst, std::abs(m - t));
  }
  return worst;
}

double verify_unconditional_mean(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed) {
  const Dataset data = generate(spec, n, seed);
  const auto set = compute_residuals(true_model(spec, data), data);
  return fnfn(set.residuals).sup_dev;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ConvergenceRow> verify_convergence(const ScenarioSpec& spec, bool misspecified, std::span<const std::size_t> ns,
                                            int seeds, std::uint64_t base_seed) {
  if (seeds <= 0) fail(ErrorCode::InvalidArgument, "seeds must be positive");
  if (misspecified && !spec.misspecified) fail(ErrorCode::InvalidArgument, spec.name + " has no misspecified model");
  const ModelSpec& working = misspecified ? *spec.misspecified : spec.correct;
  std::vector<ConvergenceRow> rows;
  for (std::size_t n : ns) {
    ConvergenceRow row;
    row.n = n;
    row.sup_devs.assign(static_cast<std::size_t>(seeds), 0.0);
    parallel_for(row.sup_devs.size(), [&](std::size_t k) {
      const Dataset data = generate(spec, n, base_seed + k);
      const FittedModel m = fit(working, data);
      row.sup_devs[k] = fnfn(compute_residuals(m, data).residuals).sup_dev;
    });
    row.median = median(row.sup_devs);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double latent_draw(Link link, RngStream& rng) {
  switch (link) {
    case Link::Logit: return std::log(rng.exponential() / rng.exponential());
    case Link::Probit: return rng.normal();
    case Link::Cloglog: return std::log(rng.exponential());
  }
  return 0.0;
}

}  // namespace

double verify_surrogate_ks(Link link, double lo, double hi, std::size_t draws, RngStream& rng) {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0)) fail(ErrorCode::InvalidArgument, "need 0 <= lo < hi <= 1");
  if (draws == 0) fail(ErrorCode::InvalidArgument, "draws must be positive");
  const FunctionalResidual r{lo, hi, 0};
  std::vector<double> surrogate(draws), direct;
  for (auto& v : surrogate) v = surrogate_draw(r, link, rng);
  direct.reserve(draws);
  while (direct.size() < draws) {
    const double e = latent_draw(link, rng);
    const double u = LinkFunctions::cdf(link, e);
    if (lo < u && u <= hi) direct.push_back(e);
  }
  return ks_two_sample(std::move(surrogate), std::move(direct));
}

SignIdentityCheck verify_sign_identity(std::span<const FunctionalResidual> residuals, std::size_t draws, RngStream& rng) {
  if (draws == 0) fail(ErrorCode::InvalidArgument, "draws must be positive");
  SignIdentityCheck out;
  for (const auto& r : residuals) {
    double sum = 0.0;
    for (std::size_t k = 0; k < draws; ++k) sum += r.lo + (r.hi - r.lo) * rng.uniform();
    const double m = sum / static_cast<double>(draws);
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(sign_residual(r) - (2.0 * m - 1.0)));
    if (r.width() > 0) {
      const double sd = r.width() / std::sqrt(12.0 * static_cast<double>(draws));
      out.max_z = std::max(out.max_z, std::abs(0.5 * (r.lo + r.hi) - m) / sd);
    }
  }
  return out;
}

double lowess_range(const FittedModel& model, const Dataset& data, const std::string& column) {
  const auto set = compute_residuals(model, data);
  const auto x = covariate_for(set, data.column(column));
  return residual_lowess(set.residuals, x, Scale::Normal).range();
}

}  // namespace funres
