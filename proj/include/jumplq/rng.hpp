#pragma once

#include <cmath>
#include <cstdint>

namespace jumplq {

// splitmix64 finalizer (the usual constants).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Counter-based draw: a pure function of (seed, a, b, c). Any worker can
// evaluate any subset in any order and the stream never changes.
inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ull);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

// Uniform on (0,1); bounded away from 0 so log() is safe.
inline double counter_uniform(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b, std::uint64_t c) {
  return (static_cast<double>(counter_bits(seed, a, b, c) >> 11) + 0.5) * 0x1p-53;
}

// One standard normal (Box-Muller, cosine branch); burns counters 2c, 2c+1.
inline double counter_normal(std::uint64_t seed, std::uint64_t a,
                             std::uint64_t b, std::uint64_t c) {
  const double u1 = counter_uniform(seed, a, b, 2 * c);
  const double u2 = counter_uniform(seed, a, b, 2 * c + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692528676655900577 * u2);
}

// Stream ids keep draw families disjoint within one (seed, path).
inline constexpr std::uint64_t kStreamBrownian = 1;
inline constexpr std::uint64_t kStreamJumpBase = 0x100;    // + mark index
inline constexpr std::uint64_t kStreamControl = 0x10000;   // + control ordinal

}  // namespace jumplq
