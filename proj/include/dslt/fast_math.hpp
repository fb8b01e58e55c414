#pragma once

/// Branch-light polynomial exp for the O(n^2)-pair estimator loops.
/// Deterministic (no libm dispatch), auto-vectorizes, max relative error
/// ~5e-9 — far below the Monte Carlo noise it sits under.

#include <bit>
#include <cmath>
#include <cstdint>

namespace dslt {

/// e^{-x} for x >= 0; exact 0 below the double underflow cliff.
inline double fast_exp_neg(double x) {
  if (x > 708.0) return 0.0;
  const double t = -x * 1.4426950408889634;  // x / ln 2
  const double n = std::floor(t + 0.5);
  const double r = (t - n) * 0.6931471805599453;  // |r| <= ln(2)/2
  const double p =
      1.0 +
      r * (1.0 + r * (0.5 + r * (1.0 / 6.0 +
                                 r * (1.0 / 24.0 +
                                      r * (1.0 / 120.0 +
                                           r * (1.0 / 720.0 + r * (1.0 / 5040.0)))))));
  const auto bits = static_cast<uint64_t>(static_cast<int64_t>(n) + 1023) << 52;
  return p * std::bit_cast<double>(bits);
}

}  // namespace dslt
