#include "core/rng.hpp"

#include "core/error.hpp"

#include <cmath>
#include <numeric>

namespace funres {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                       0x66756e72u /* tag */};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() {
  double u;
  do {
    u = uniform();
  } while (u == 0.0);
  return u;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RngStream::normal(double mean, double sd) {
  if (!(sd >= 0)) fail(ErrorCode::InvalidArgument, "normal sd must be non-negative");
  return mean + sd * normal();
}

double RngStream::exponential() { return -std::log(uniform_open()); }

// Marsaglia & Tsang (2000); shape < 1 via the U^(1/shape) boost.
double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0) || !(rate > 0)) fail(ErrorCode::InvalidArgument, "gamma requires shape > 0 and rate > 0");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0, 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

int RngStream::poisson(double mean) {
  if (!(mean >= 0) || !std::isfinite(mean)) fail(ErrorCode::InvalidArgument, "poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Sequential inversion.
    double p = std::exp(-mean);
    double cdf = p;
    const double u = uniform();
    int k = 0;
    while (u > cdf && k < 10000) {
      ++k;
      p *= mean / k;
      cdf += p;
      if (p == 0.0) break;
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform_open();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<int>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<int>(k);
  }
}

bool RngStream::bernoulli(double p) {
  if (!(p >= 0 && p <= 1)) fail(ErrorCode::InvalidArgument, "bernoulli probability outside [0,1]");
  return uniform() < p;
}

int RngStream::categorical(std::span<const double> probs) {
  if (probs.empty()) fail(ErrorCode::InvalidArgument, "categorical requires at least one probability");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0) || !std::isfinite(p)) fail(ErrorCode::InvalidArgument, "categorical probabilities must be >= 0");
    total += p;
  }
  if (!(total > 0)) fail(ErrorCode::InvalidArgument, "categorical probabilities sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0) last_positive = static_cast<int>(j);
    acc += probs[j];
    if (u < acc) return static_cast<int>(j);
  }
  return last_positive;
}

int RngStream::truncated_poisson(double mean) {
  if (!(mean > 0) || !std::isfinite(mean)) fail(ErrorCode::InvalidArgument, "truncated poisson mean must be > 0");
  // Inverse CDF over y >= 1; pmf(1) = mean e^{-mean} / (1 - e^{-mean}).
  const double u = uniform();
  const double log_norm = std::log(-std::expm1(-mean));
  double log_p = std::log(mean) - mean - log_norm;
  double cdf = std::exp(log_p);
  int k = 1;
  while (u >= cdf && k < 1000000) {
    ++k;
    log_p += std::log(mean / k);
    const double p = std::exp(log_p);
    cdf += p;
    if (p < 1e-300 && k > mean) break;
  }
  return k;
}

}  // namespace funres
