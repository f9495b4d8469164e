#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace bitrans::nd {

/// Seeded generator with platform-independent draws.
///
/// std::uniform_real_distribution and friends are implementation-defined, so
/// every distribution used by the library is derived here from the raw
/// mt19937_64 stream. Identical seeds give identical sequences on every
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached second draw, so state is
  /// a pure function of the number of calls).
  double normal();

  /// Uniform integer in [0, n). Rejection sampling, unbiased.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Stable 64-bit seed for a named sub-stream:
///   splitmix64(master ^ fnv1a64(label))
/// with FNV offset 0xcbf29ce484222325, prime 0x100000001b3, and the standard
/// SplitMix64 finaliser (increment 0x9e3779b97f4a7c15, multipliers
/// 0xbf58476d1ce4e5b9 and 0x94d049bb133111eb, shifts 30/27/31).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

}  // namespace bitrans::nd
