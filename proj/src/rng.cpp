#include "mirage/rng.hpp"

#include "mirage/digest.hpp"

namespace mirage {

namespace {

std::uint64_t splitmix_step(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next() { return splitmix_step(state_); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling over the largest multiple of n.
  const std::uint64_t limit = ~0ull - (~0ull % n) - 1;
  std::uint64_t v = next();
  while (v > limit) v = next();
  return v % n;
}

std::int64_t Rng::in_range(std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double exp_neg(double x) {
  // e^{-x} = (e^{-1})^n * e^{-f} with n = floor(x), f in [0,1).
  // The Taylor series for e^{-f} converges in < 20 terms; every operation is
  // an IEEE-exact +,*,/ so results are identical on any conforming platform.
  constexpr double kExpNegOne = 0.36787944117144232160;
  if (x <= 0.0) return 1.0;
  std::int64_t n = static_cast<std::int64_t>(x);
  double f = x - static_cast<double>(n);
  double pow_part = 1.0;
  for (std::int64_t i = 0; i < n; ++i) pow_part *= kExpNegOne;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    term *= -f / static_cast<double>(k);
    sum += term;
    if (term < 1e-18 && term > -1e-18) break;
  }
  return pow_part * sum;
}

std::int64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  // Knuth's method underflows past mean ~700; additivity of Poisson lets us
  // split large means into halves.
  if (mean > 60.0) {
    double half = mean / 2.0;
    std::int64_t a = poisson(half);
    std::int64_t b = poisson(half);
    return a + b;
  }
  const double limit = exp_neg(mean);
  std::int64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= unit();
  } while (p > limit);
  return k - 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t state = seed ^ fnv1a64(label);
  return splitmix_step(state);
}

}  // namespace mirage
