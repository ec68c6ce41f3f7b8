#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace proxpty {

/// Small splitmix64 generator. Per-position streams are derived by hashing
/// (seed, position), so simulated datasets do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return u;
  }

  static Rng position_stream(std::uint64_t seed, std::uint64_t position) {
    Rng mix(seed ^ (0x9e3779b97f4a7c15ull * (position + 1)));
    mix.next_u64();
    return mix;
  }

 private:
  std::uint64_t state_;
};

namespace detail {

/// ln(n!) to ~1e-13: exact accumulation below 1024, Stirling series above.
inline double ln_factorial(std::uint64_t n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(1024);
    long double acc = 0.0L;
    t[0] = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
      acc += std::log(static_cast<long double>(k));
      t[k] = static_cast<double>(acc);
    }
    return t;
  }();
  if (n < table.size()) return table[n];
  const double x = static_cast<double>(n);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return x * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi * x) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

}  // namespace detail

/// Poisson deviate: CDF inversion below mean 30, logistic-envelope rejection
/// (Atkinson) above. The logistic proposal tracks the normal approximation of
/// the target while keeping heavy enough tails for a valid envelope.
inline std::uint64_t poisson_draw(Rng& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson_draw: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double target = rng.uniform01();
    double pmf = std::exp(-mean);
    double cdf = pmf;
    std::uint64_t k = 0;
    const std::uint64_t cap = static_cast<std::uint64_t>(mean + 60.0 * std::sqrt(mean) + 100.0);
    while (target > cdf && k < cap) {
      ++k;
      pmf *= mean / static_cast<double>(k);
      cdf += pmf;
    }
    return k;
  }
  const double c = 0.767 - 3.36 / mean;
  const double beta = std::numbers::pi / std::sqrt(3.0 * mean);
  const double alpha = beta * mean;
  const double k0 = std::log(c) - mean - std::log(beta);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = rng.uniform_open();
    const double x = (alpha - std::log((1.0 - u) / u)) / beta;
    const double n = std::floor(x + 0.5);
    if (n < 0.0) continue;
    const double v = rng.uniform_open();
    const double y = alpha - beta * x;
    const double t = 1.0 + std::exp(y);
    const double lhs = y + std::log(v / (t * t));
    const double rhs = k0 + n * log_mean - detail::ln_factorial(static_cast<std::uint64_t>(n));
    if (lhs <= rhs) return static_cast<std::uint64_t>(n);
  }
}

}  // namespace proxpty
