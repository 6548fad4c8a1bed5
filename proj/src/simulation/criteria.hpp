#pragma once

#include <string>
#include <vector>

namespace funres {

/// One acceptance check: `value` compared against `threshold` in direction `op`.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string op;      // "<", ">=", ...
  std::string detail;  // per-case breakdown
  double seconds = 0.0;
};

/// Ids of the simulation-based criteria, in report order.
std::vector<int> simulation_criteria();
/// Runs one criterion with its pinned tolerances and fixed seeds. Throws InvalidArgument for unknown ids.
CriterionResult run_criterion(int id);
/// {"criteria": [...], "passed": k, "total": m}
std::string criteria_report_json(const std::vector<CriterionResult>& results);

}  // namespace funres
