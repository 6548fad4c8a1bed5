#pragma once

namespace funres {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

double std_normal_pdf(double z);
/// Absolute error below 1e-15 over the real line.
double std_normal_cdf(double z);
/// Upper tail 1 - Phi(z) without cancellation.
double std_normal_sf(double z);
/// Wichura's AS241 (PPND16); relative accuracy about 1e-16. Throws Domain outside (0,1).
double std_normal_quantile(double p);

double logistic(double eta);
/// log(1 + exp(x)) without overflow.
double log1p_exp(double x);
double logit(double p);

/// Pr{Y <= y} for Y ~ Poisson(mean); y < 0 gives 0, mean == 0 gives 1.
double poisson_cdf(int y, double mean);
double poisson_log_pmf(int y, double mean);

/// CDF of the zero-truncated Poisson on {1,2,...}; y < 1 gives 0.
double truncated_poisson_cdf(int y, double mean);

/// Gamma-mixed Poisson with mean `mean` and variance `dispersion * mean` (NB1).
/// dispersion <= 1 reduces to the Poisson CDF.
double nb1_cdf(int y, double mean, double dispersion);

}  // namespace funres
