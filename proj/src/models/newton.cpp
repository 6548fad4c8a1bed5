#include "models/newton.hpp"

#include <cmath>
#include <limits>

namespace funres {

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

NewtonResult maximize(const std::function<Objective(const Eigen::VectorXd&, bool)>& eval, Eigen::VectorXd start,
                      const NewtonOptions& opts) {
  NewtonResult res;
  res.theta = std::move(start);
  res.at_theta = eval(res.theta, true);
  res.gradient_norm = max_abs(res.at_theta.gradient) / opts.scale;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res.gradient_norm < opts.tolerance) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd& g = res.at_theta.gradient;
    const Eigen::MatrixXd neg_h = -res.at_theta.hessian;

    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
    bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all();
    if (newton_ok) {
      step = ldlt.solve(g);
      newton_ok = step.allFinite() && step.dot(g) > 0;
    }
    if (!newton_ok) {
      // Gradient ascent scaled by the Hessian diagonal where it is informative.
      Eigen::VectorXd d = neg_h.diagonal().cwiseAbs().cwiseMax(1e-8);
      step = g.cwiseQuotient(d);
    }

    double t = 1.0;
    bool improved = false;
    Objective next;
    Eigen::VectorXd cand;
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      cand = res.theta + t * step;
      next = eval(cand, false);
      if (std::isfinite(next.value) && next.value >= res.at_theta.value) {
        improved = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!improved) break;

    const double gain = next.value - res.at_theta.value;
    res.theta = cand;
    res.at_theta = eval(res.theta, true);
    res.gradient_norm = max_abs(res.at_theta.gradient) / opts.scale;
    if (res.theta.norm() > opts.divergence_norm) {
      res.diverged = true;
      break;
    }
    if (gain == 0.0 && t < 1e-10) break;
  }
  if (res.gradient_norm < opts.tolerance) res.converged = true;
  return res;
}

}  // namespace funres
