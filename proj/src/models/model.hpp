#pragma once

#include "core/dataset.hpp"
#include "core/terms.hpp"
#include "models/newton.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace funres {

class RngStream;

enum class Family { BinaryLogit, CumulativeLink, AdjacentCategory, Poisson, QuasiPoisson, HurdlePoisson };
enum class Link { Logit, Probit, Cloglog };

const char* family_name(Family f);
Family parse_family(const std::string& name);
const char* link_name(Link l);
Link parse_link(const std::string& name);

bool is_ordinal(Family f);
bool is_count(Family f);

struct ModelSpec {
  Family family = Family::Poisson;
  Link link = Link::Logit;  // cumulative-link only
  TermSet terms;
  TermSet zero_terms;  // hurdle-poisson zero part: logit Pr{Y = 0}
  /// Largest ordinal category J (outcomes 0..J); 0 means "infer from data".
  int max_category = 0;
};

/// Inverse-link helpers for cumulative-link models: G, its density g and g'.
struct LinkFunctions {
  static double cdf(Link l, double z);
  static double sf(Link l, double z);
  static double pdf(Link l, double z);
  static double pdf_derivative(Link l, double z);
  static double quantile(Link l, double p);
  /// G(upper) - G(lower) evaluated in whichever tail keeps precision.
  static double interval(Link l, double lower, double upper);
};

/// Adjacent-category probabilities for log(p_j / p_{j+1}) = alpha_j + eta, j = 0..J-1.
Eigen::VectorXd adjacent_category_probs(const Eigen::VectorXd& alpha, double eta);
/// Convenience overload with eta = x . beta.
Eigen::VectorXd adjacent_category_probs(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                        const Eigen::VectorXd& x);

/// Result of maximum-likelihood estimation. Immutable; shareable across threads.
///
/// Parameter layout by family:
///  - binary-logit / poisson / quasi-poisson: `beta` on the design columns (an
///    intercept term, when present, is one of them); Pr{Y=1} = logistic(x.beta).
///  - cumulative-link: `alpha` holds cutpoints c_0 < ... < c_{J-1} and
///    Pr{Y <= j} = G(c_j - x.beta).
///  - adjacent-category: log(p_j / p_{j+1}) = alpha_j + x.beta.
///  - hurdle-poisson: logit Pr{Y=0} = z.gamma and positives follow a zero-truncated
///    Poisson with log mean x.beta.
class FittedModel {
 public:
  ModelSpec spec;
  DesignBasis design;
  DesignBasis zero_design;
  int max_category = 0;

  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  double dispersion = 1.0;  // variance-to-mean ratio, quasi-poisson only
  bool dispersion_fallback = false;

  double loglik = 0.0;
  Eigen::MatrixXd vcov;  // ordered as coefficient_names()
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t nobs = 0;

  /// Builds a model with known parameters (no fitting); `reference` fixes the
  /// covariate layout and any spline knots.
  static FittedModel from_parameters(const ModelSpec& spec, const Dataset& reference, Eigen::VectorXd alpha,
                                     Eigen::VectorXd beta, Eigen::VectorXd gamma = {}, double dispersion = 1.0);

  std::vector<std::string> coefficient_names() const;
  Eigen::VectorXd estimates() const;
  Eigen::VectorXd standard_errors() const;
  std::size_t num_parameters() const;
  /// -2 loglik + 2 k; NaN for quasi-poisson.
  double aic() const;

  /// pi(y; x) = Pr{Y <= y | x} for a raw covariate row; y = -1 gives 0.
  double cumulative_prob(int y, std::span<const double> raw) const;
  /// Same, for a dataset row.
  double cumulative_prob(int y, const Dataset& data, std::size_t row) const;
  /// Fitted mean E[Y | x].
  double mean(std::span<const double> raw) const;
  /// Draws an outcome from the model at x.
  int sample(std::span<const double> raw, RngStream& rng) const;

  /// Internal evaluator on precomputed design rows (zrow ignored unless hurdle).
  double cumulative_prob_rows(int y, const Eigen::RowVectorXd& xrow, const Eigen::RowVectorXd& zrow) const;
  double mean_rows(const Eigen::RowVectorXd& xrow, const Eigen::RowVectorXd& zrow) const;

  std::string summary_json() const;
};

struct FitOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
};

/// Maximum likelihood for every family. Throws RankDeficient, Separation or
/// InvalidArgument; non-convergence is reported through `converged`.
FittedModel fit(const ModelSpec& spec, const Dataset& data, const FitOptions& opts = {});

/// Ordinal log-likelihood with analytic score and Hessian. `theta` is laid out as
/// (alpha_0..alpha_{J-1}, beta) in the natural parameterization.
Objective ordinal_log_likelihood(const ModelSpec& spec, const Dataset& data, int max_category,
                                 const Eigen::VectorXd& theta);

/// Model-based helpers for point residuals.
double hurdle_cumulative(double p_zero, double mu, int y);
double quasipoisson_cumulative(double mu, double dispersion, int y);

}  // namespace funres
