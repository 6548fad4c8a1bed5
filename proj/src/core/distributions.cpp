#include "core/distributions.hpp"

#include "core/error.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <string>

namespace funres {

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double std_normal_sf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    fail(ErrorCode::Domain, "normal quantile requires p in (0,1), got " + std::to_string(p));

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }

  double r = q < 0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0 ? -val : val;
}

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  if (x > 35) return x;
  if (x < -35) return std::exp(x);
  return std::log1p(std::exp(x));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double poisson_log_pmf(int y, double mean) {
  if (y < 0) return -INFINITY;
  if (mean <= 0) return y == 0 ? 0.0 : -INFINITY;
  return y * std::log(mean) - mean - std::lgamma(y + 1.0);
}

double poisson_cdf(int y, double mean) {
  if (y < 0) return 0.0;
  if (mean <= 0) return 1.0;
  return boost::math::gamma_q(y + 1.0, mean);
}

double truncated_poisson_cdf(int y, double mean) {
  if (y < 1) return 0.0;
  if (mean <= 0) return 1.0;
  // (F(y) - F(0)) / (1 - F(0)) = 1 - Pr{Y > y} / Pr{Y > 0}
  const double mass_above_zero = -std::expm1(-mean);
  const double above_y = boost::math::gamma_p(y + 1.0, mean);  // Pr{Y > y}
  const double v = 1.0 - above_y / mass_above_zero;
  return v < 0 ? 0.0 : (v > 1 ? 1.0 : v);
}

double nb1_cdf(int y, double mean, double dispersion) {
  if (y < 0) return 0.0;
  if (mean <= 0) return 1.0;
  if (!(dispersion > 1.0)) return poisson_cdf(y, mean);
  // lambda ~ Gamma(shape = mean / (d - 1), rate = 1 / (d - 1)): negative binomial
  // with size r = mean / (d - 1) and success probability 1 / d.
  const double size = mean / (dispersion - 1.0);
  const double prob = 1.0 / dispersion;
  return boost::math::ibeta(size, y + 1.0, prob);
}

}  // namespace funres
