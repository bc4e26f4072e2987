#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace divsf {

/// All stochastic code draws from this engine. Its output sequence is fixed by
/// the standard, and the conversions below avoid the implementation-defined
/// std:: distributions, so seeded results are identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw of an index from an unnormalized non-negative weight
/// vector (row or column). Falls back to the last positive index on round-off.
template <typename Weights>
int sample_index(const Weights& weights, Rng& rng) {
  const double total = weights.sum();
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (w <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += w;
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

/// Standard normal via Box-Muller on uniform01 draws.
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace divsf
