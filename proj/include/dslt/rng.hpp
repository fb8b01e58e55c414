#pragma once

/// Counter-derived splittable RNG streams.  Worker w simulating path i draws
/// from a stream derived from (master_seed, i) alone, so ensembles are
/// independent of worker count and scheduling order.

#include <cstdint>
#include <cmath>

#include "dslt/math_kernels.hpp"

namespace dslt {

/// SplitMix64 finalizer (bijective 64-bit mix).
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// SplitMix64: tiny, fast, passes BigCrush at this use scale.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    return mix64(state);
  }

  /// Uniform in the open interval (0,1) (both endpoints excluded, so logs
  /// and quantiles are always finite).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

/// Stream seed for path `index` under `master_seed`.  Double-mixed so
/// consecutive indices land at unrelated points of the SplitMix64 orbit
/// (plain "state = master + index" would make streams shifted copies).
inline uint64_t derive_stream(uint64_t master_seed, uint64_t index) {
  return mix64(master_seed + mix64(0x9E3779B97F4A7C15ULL * (index + 1)));
}

/// Standard normal draws via Box-Muller on a SplitMix64 stream.
struct GaussianStream {
  SplitMix64 rng;
  double cached = 0.0;
  bool has_cached = false;

  explicit GaussianStream(uint64_t seed) : rng(seed) {}

  double next() {
    if (has_cached) {
      has_cached = false;
      return cached;
    }
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * pi * u2;
    cached = r * std::sin(a);
    has_cached = true;
    return r * std::cos(a);
  }
};

}  // namespace dslt
