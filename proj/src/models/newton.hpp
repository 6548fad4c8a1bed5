#pragma once

#include <Eigen/Dense>

#include <functional>

namespace funres {

struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

struct NewtonOptions {
  int max_iterations = 100;
  /// Converged when max |gradient| / scale < tolerance.
  double tolerance = 1e-8;
  double scale = 1.0;
  int max_halvings = 40;
  /// Iterates whose Euclidean norm exceeds this are reported as diverging.
  double divergence_norm = 1e3;
};

struct NewtonResult {
  Eigen::VectorXd theta;
  Objective at_theta;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  double gradient_norm = 0.0;  // max |g| / scale at theta
};

/// Maximizes a concave-ish objective by Newton-Raphson with step halving. When the
/// Hessian is not negative definite the step falls back to the gradient direction.
/// `eval(theta, need_derivatives)` may return value = -inf for infeasible points.
NewtonResult maximize(const std::function<Objective(const Eigen::VectorXd&, bool)>& eval, Eigen::VectorXd start,
                      const NewtonOptions& opts);

}  // namespace funres
