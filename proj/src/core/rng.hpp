#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace funres {

/// A reproducible random stream keyed by (seed, stream id). Distinct stream ids
/// seed independent Mersenne-twister states through std::seed_seq, so parallel
/// replications never share a generator. Single owner; not thread-safe.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  /// Uniform on (0,1); never returns 0.
  double uniform_open();
  double normal();  // Marsaglia polar method
  double normal(double mean, double sd);
  double exponential();
  double gamma(double shape, double rate);
  int poisson(double mean);
  bool bernoulli(double p);
  /// Index drawn with probability proportional to `probs` (need not be normalized).
  int categorical(std::span<const double> probs);
  /// Zero-truncated Poisson by inversion of the truncated CDF.
  int truncated_poisson(double mean);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace funres
