#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pairrank/gauss.hpp"

namespace pairrank {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed. Every sampling stage
/// (parameters, support, comparisons, ...) gets its own stream so that
/// changing one stage never shifts the draws of another.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

/// The single random generator used everywhere in the library: an explicitly
/// seeded mt19937_64 with hand-rolled variate transforms, so results are a
/// pure function of (seed, draw order) and do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal() {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return norm_inv_cdf(u);
  }

  /// Binomial(k, p). Exact Bernoulli summation up to 1024 trials; Gaussian
  /// approximation (rounded, clamped) above, where the CLT error is far below
  /// anything the consumers of this library resolve.
  long binomial(long k, double p) {
    if (k <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return k;
    if (k <= 1024) {
      long wins = 0;
      for (long t = 0; t < k; ++t) wins += bernoulli(p) ? 1 : 0;
      return wins;
    }
    double mean = static_cast<double>(k) * p;
    double sd = std::sqrt(static_cast<double>(k) * p * (1.0 - p));
    long w = std::lround(mean + sd * normal());
    if (w < 0) w = 0;
    if (w > k) w = k;
    return w;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pairrank
