#pragma once

/// Pathwise DSLT machinery: the regularized estimator alpha_eps (double
/// Riemann sum of p'_eps(B_t - B_s) over the triangle s < t) and its
/// Wiener-chaos projections J_{2q-1}, plus the theorem scalings.
///
/// Discretization rule: cells [t_i,t_{i+1}] x [t_j,t_{j+1}] with i < j <= n-1,
/// weight dt^2, integrand evaluated at the grid values (the excluded diagonal
/// cells carry p'_eps(0) = 0, so the exclusion is exact in the limit).

#include <cmath>
#include <span>
#include <vector>

#include "dslt/errors.hpp"
#include "dslt/fast_math.hpp"
#include "dslt/fbm_model.hpp"
#include "dslt/fbm_sim.hpp"

namespace dslt {

struct DsltEstimate {
  double raw = 0.0;     // alpha_eps discretization
  double scaled = 0.0;  // eps^{3/2 - 1/H} * raw
  double eps = 0.0;
  GridSpec grid;
  bool kernel_resolved = true;  // dt <= sqrt(eps)?
};

struct ChaosProjectionEstimate {
  int q = 1;
  double raw = 0.0;     // J_{2q-1}[alpha_eps] discretization
  double scaled = 0.0;  // eps^{1 - 3/(4H)} * raw
  double eps = 0.0;
};

/// eps^{3/2 - 1/H} * raw (the alpha CLT scaling).
inline double scale_alpha(const HurstModel& model, double eps, double raw) {
  if (!(eps > 0.0)) throw domain_error("scale_alpha: eps must be > 0");
  return std::pow(eps, 1.5 - 1.0 / model.hurst) * raw;
}

/// eps^{1 - 3/(4H)} * raw (the chaos CLT scaling).
inline double scale_chaos(const HurstModel& model, double eps, double raw) {
  if (!(eps > 0.0)) throw domain_error("scale_chaos: eps must be > 0");
  return std::pow(eps, 1.0 - 0.75 / model.hurst) * raw;
}

/// True iff the grid resolves the kernel width (dt <= sqrt(eps)).  Violation
/// is a warning condition, never an error: under-resolution is a legitimate
/// thing to study, it just biases the Riemann sum.
inline bool grid_resolves_kernel(const GridSpec& grid, double eps) {
  return grid.dt() <= std::sqrt(eps);
}

namespace detail {

/// Odd probabilists' Hermite H_{2q-1}(z), unrolled for the degrees the chaos
/// estimators hit in hot loops.
inline double hermite_odd(int q, double z) {
  const double z2 = z * z;
  switch (q) {
    case 1:
      return z;
    case 2:
      return z * (z2 - 3.0);
    case 3:
      return z * (z2 * (z2 - 10.0) + 15.0);
    case 4:
      return z * (z2 * (z2 * (z2 - 21.0) + 105.0) - 105.0);
    default:
      return hermite(2 * q - 1, z);
  }
}

/// Sum of f(values[i + lag] - values[i]) for i = 0..count-1 with eight
/// independent accumulators, so the compiler may vectorize the reduction
/// without reassociating a single serial chain.
template <class F>
inline double lag_sum(const double* values, int lag, int count, F&& f) {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0;
  int i = 0;
  for (; i + 8 <= count; i += 8) {
    a0 += f(values[i + lag] - values[i]);
    a1 += f(values[i + 1 + lag] - values[i + 1]);
    a2 += f(values[i + 2 + lag] - values[i + 2]);
    a3 += f(values[i + 3 + lag] - values[i + 3]);
    a4 += f(values[i + 4 + lag] - values[i + 4]);
    a5 += f(values[i + 5 + lag] - values[i + 5]);
    a6 += f(values[i + 6 + lag] - values[i + 6]);
    a7 += f(values[i + 7 + lag] - values[i + 7]);
  }
  for (; i < count; ++i) a0 += f(values[i + lag] - values[i]);
  return ((a0 + a1) + (a2 + a3)) + ((a4 + a5) + (a6 + a7));
}

}  // namespace detail

/// alpha_eps estimate for one path: dt^2 sum_{0<=i<j<=n-1} p'_eps(v_j - v_i).
inline DsltEstimate alpha_eps(const HurstModel& model, const FbmPath& path, double eps) {
  if (!(eps > 0.0)) throw domain_error("alpha_eps: eps must be > 0");
  const int n = path.grid.n;
  const double dt = path.grid.dt();
  const double* v = path.values.data();
  const double inv_2eps = 1.0 / (2.0 * eps);
  double acc = 0.0;
  for (int lag = 1; lag < n; ++lag)
    acc += detail::lag_sum(v, lag, n - lag,
                           [inv_2eps](double d) { return d * fast_exp_neg(d * d * inv_2eps); });
  // p'_eps(d) = -(d/eps) (2 pi eps)^{-1/2} e^{-d^2/(2 eps)}
  const double raw = -acc * dt * dt / (eps * sqrt_two_pi * std::sqrt(eps));
  return {raw, scale_alpha(model, eps, raw), eps, path.grid, grid_resolves_kernel(path.grid, eps)};
}

/// Per-lag Hermite sums: bucket[lag] = sum_i H_{2q-1}((v_{i+lag} - v_i) / (lag dt)^H).
/// One pass over the path serves every eps (the eps-dependence sits entirely
/// in the per-lag coefficients contracted against these buckets).
inline void chaos_lag_buckets(const HurstModel& model, const FbmPath& path, int q,
                              std::vector<double>& buckets) {
  const int n = path.grid.n;
  const double dt = path.grid.dt();
  const double* v = path.values.data();
  buckets.assign(static_cast<size_t>(n), 0.0);
  for (int lag = 1; lag < n; ++lag) {
    const double inv_dh = std::pow(lag * dt, -model.hurst);
    buckets[static_cast<size_t>(lag)] = detail::lag_sum(
        v, lag, n - lag, [q, inv_dh](double d) { return detail::hermite_odd(q, d * inv_dh); });
  }
}

/// Contracts precomputed lag buckets against the eps-dependent coefficients:
/// J_{2q-1} = dt^2 sum_lag (-1)^q beta_q (eps + delta^{2H})^{-q-1/2} delta^{(2q-1)H} bucket[lag],
/// delta = lag dt.
inline ChaosProjectionEstimate chaos_from_buckets(const HurstModel& model,
                                                  const GridSpec& grid, int q, double eps,
                                                  std::span<const double> buckets) {
  if (!(eps > 0.0)) throw domain_error("chaos_projection: eps must be > 0");
  if (q < 1) throw domain_error("chaos_projection: q must be >= 1");
  const double dt = grid.dt();
  const double a = model.two_h();
  const double beta = ChaosKernelSpec::beta_q_for(q);
  const double sign = (q % 2 == 0) ? 1.0 : -1.0;
  double acc = 0.0;
  for (int lag = 1; lag < grid.n; ++lag) {
    const double delta = lag * dt;
    const double coef = std::pow(eps + std::pow(delta, a), -(q + 0.5)) *
                        std::pow(delta, (2 * q - 1) * model.hurst);
    acc += coef * buckets[static_cast<size_t>(lag)];
  }
  const double raw = sign * beta * acc * dt * dt;
  return {q, raw, scale_chaos(model, eps, raw), eps};
}

/// Chaos projection J_{2q-1}[alpha_eps] for one path.
inline ChaosProjectionEstimate chaos_projection(const FbmPath& path,
                                                const ChaosKernelSpec& spec) {
  std::vector<double> buckets;
  chaos_lag_buckets(spec.model, path, spec.q, buckets);
  return chaos_from_buckets(spec.model, path.grid, spec.q, spec.eps, buckets);
}

}  // namespace dslt
