#pragma once

#include <functional>
#include <span>
#include <vector>

namespace funres {

double mean(std::span<const double> v);
/// Type-7 sample quantile; `v` need not be sorted.
double sample_quantile(std::vector<double> v, double p);
double median(std::vector<double> v);

/// sup |F_a - F_b| between two empirical CDFs.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// sup |F_n - F| against a continuous reference CDF.
double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

}  // namespace funres
