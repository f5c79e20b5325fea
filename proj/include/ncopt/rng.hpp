#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ncopt::rng {

// Stateless stream-and-counter generator used for all problem-instance data.
// Variate k of stream s under a 64-bit seed is
//
//   u64(seed, s, k) = mix64(mix64(seed + GAMMA*(s+1)) + GAMMA*(k+1))
//
// where mix64 is the SplitMix64 finalizer and GAMMA its golden-ratio
// increment. Being a pure function of (seed, stream, counter), instances
// regenerate bit-identically in any implementation of the same recipe.

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter) {
  const std::uint64_t base = mix64(seed + golden_gamma * (stream + 1));
  return mix64(base + golden_gamma * (counter + 1));
}

/// Uniform double in [0, 1), 53 explicit bits.
inline double uniform01(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter) {
  return static_cast<double>(keyed_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller, cosine branch only. Draw k consumes
/// counters 2k and 2k+1 of its stream; u1 is shifted into (0, 1] so the log
/// never sees zero.
inline double normal01(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter) {
  const double u1 =
      static_cast<double>((keyed_u64(seed, stream, 2 * counter) >> 11) + 1) *
      0x1.0p-53;
  const double u2 =
      static_cast<double>(keyed_u64(seed, stream, 2 * counter + 1) >> 11) *
      0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline bool bernoulli(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter, double p) {
  return uniform01(seed, stream, counter) < p;
}

}  // namespace ncopt::rng
