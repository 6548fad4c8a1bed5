#include "core/stats.hpp"
#include "diagnostics/diagnostics.hpp"
#include "simulation/scenario.hpp"
#include "simulation/verify.hpp"

#include <cstdio>
#include <vector>

using namespace funres;

// Prints the 99th percentile of the correct-model Fn-Fn sup deviation for each
// scenario over 200 seeds starting at the scenario's null_seed.
int main() {
  constexpr int kSeeds = 200;
  for (const auto& spec : scenario_registry()) {
    std::vector<double> sup(kSeeds);
    parallel_for(sup.size(), [&](std::size_t k) {
      const Dataset data = generate(spec, spec.n, spec.null_seed + k);
      sup[k] = fnfn(compute_residuals(fit(spec.correct, data), data).residuals).sup_dev;
    });
    std::printf("{\"%s\", %.4f},  // median %.4f max %.4f\n", spec.name.c_str(), sample_quantile(sup, 0.99),
                median(sup), sample_quantile(sup, 1.0));
  }
  return 0;
}
