#pragma once

#include <cstdint>
#include <string_view>

namespace mirage {

// Deterministic generator (splitmix64). Every stochastic draw in the
// framework goes through this class so that runs replay bit-for-bit.
// Sampling avoids libm entirely: identical streams across platforms only
// hold if no call depends on a platform math library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Unbiased uniform in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform in [lo, hi] inclusive.
  std::int64_t in_range(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1), 53-bit resolution.
  double unit();

  // Poisson-distributed count (Knuth's product method, split for large
  // means). Deterministic given the stream position.
  std::int64_t poisson(double mean);

 private:
  std::uint64_t state_;
};

// Derives an independent child seed from a parent seed and a label, so that
// per-persona / per-day streams never overlap.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// exp(-x) for x >= 0 using only IEEE +,*,/ (no libm).
double exp_neg(double x);

}  // namespace mirage
