#pragma once

/// Pure special-function layer: probabilists' Hermite polynomials, Gaussian
/// heat kernel and its derivative, Beta via log-Gamma, the closed form of
/// int_0^inf a^alpha (c + a^beta)^gamma da, and standard-normal utilities.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "dslt/errors.hpp"

namespace dslt {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double sqrt_two_pi = 2.506628274631000502415765284811045253;

/// Probabilists' Hermite polynomial H_q(x) by the stable three-term
/// recurrence H_{q+1}(x) = x H_q(x) - q H_{q-1}(x).  (Probabilists', not
/// physicists': chaos projections depend on this convention.)
inline double hermite(int q, double x) {
  if (q < 0) throw domain_error("hermite: negative degree");
  if (!std::isfinite(x)) throw domain_error("hermite: non-finite argument");
  double hm1 = 0.0, h = 1.0;  // H_{-1} (unused), H_0
  for (int k = 0; k < q; ++k) {
    const double next = x * h - k * hm1;
    hm1 = h;
    h = next;
  }
  return h;
}

/// Batch evaluator for H_0..H_{max_degree} at one point; used by chaos
/// estimators that need a fixed degree many times.
struct HermiteEvaluator {
  int max_degree = 0;

  explicit HermiteEvaluator(int max_degree_) : max_degree(max_degree_) {
    if (max_degree < 0) throw domain_error("HermiteEvaluator: negative degree");
  }

  /// Fills out[0..max_degree] with H_q(x).
  void values(double x, std::vector<double>& out) const {
    out.resize(static_cast<size_t>(max_degree) + 1);
    out[0] = 1.0;
    if (max_degree >= 1) out[1] = x;
    for (int k = 1; k < max_degree; ++k)
      out[static_cast<size_t>(k) + 1] = x * out[k] - k * out[k - 1];
  }

  double operator()(int q, double x) const {
    if (q > max_degree) throw domain_error("HermiteEvaluator: degree above max_degree");
    return hermite(q, x);
  }
};

/// Heat kernel p_eps(x) = (2 pi eps)^{-1/2} exp(-x^2 / (2 eps)).
inline double heat_kernel(double eps, double x) {
  if (!(eps > 0.0)) throw domain_error("heat_kernel: eps must be > 0");
  if (!std::isfinite(x)) throw domain_error("heat_kernel: non-finite argument");
  return std::exp(-x * x / (2.0 * eps)) / (sqrt_two_pi * std::sqrt(eps));
}

/// Spatial derivative p'_eps(x) = -(x/eps) p_eps(x).
inline double heat_kernel_deriv(double eps, double x) {
  if (!(eps > 0.0)) throw domain_error("heat_kernel_deriv: eps must be > 0");
  if (!std::isfinite(x)) throw domain_error("heat_kernel_deriv: non-finite argument");
  return -(x / eps) * heat_kernel(eps, x);
}

/// Beta function via log-Gamma (overflow-safe for the (2q-1)!-sized
/// arguments that show up next to beta_q^2 factors).
inline double beta_fn(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw domain_error("beta_fn: arguments must be > 0");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// Closed form of int_0^inf a^alpha (c + a^beta)^gamma da:
///   beta^{-1} c^{(alpha+1+beta gamma)/beta} B((alpha+1)/beta, -(1+alpha+gamma beta)/beta),
/// valid iff c, beta > 0, alpha > -1 and 1 + alpha + gamma beta < 0.
/// Divergence is a precondition check (the admissibility region is exact),
/// never a numerical probe.
inline double lemma_beta_integral(double c, double beta, double alpha, double gamma) {
  if (!(c > 0.0)) throw domain_error("lemma_beta_integral: c must be > 0");
  if (!(beta > 0.0)) throw domain_error("lemma_beta_integral: beta must be > 0");
  if (!(alpha > -1.0)) throw domain_error("lemma_beta_integral: alpha must be > -1");
  const double tail = 1.0 + alpha + gamma * beta;
  if (!(tail < 0.0))
    throw divergent_integral_error("lemma_beta_integral: divergent (1 + alpha + gamma*beta >= 0)");
  return std::pow(c, tail / beta) / beta * beta_fn((alpha + 1.0) / beta, -tail / beta);
}

/// Standard normal density.
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / sqrt_two_pi; }

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile (Acklam's rational approximation polished by one
/// Halley step; ~1e-15 relative over (0,1)).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw domain_error("normal_quantile: p must be in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step on f(x) = Phi(x) - p.
  const double e = normal_cdf(x) - p;
  const double u = e * sqrt_two_pi * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Gauss-Hermite rule for the normalized weight phi(x) = e^{-x^2/2}/sqrt(2 pi):
///   int f(x) phi(x) dx  ~  sum_i w_i f(x_i),  sum_i w_i = 1.
/// Nodes are found by the interlacing property (each root of the orthonormal
/// Hermite h_k sits strictly between consecutive roots of h_{k+1}), bisection
/// plus Newton polish; weights are Christoffel numbers 1/sum_k h_k(x)^2.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
/// Orthonormal Hermite h_m(x) (so that int h_m h_n phi = delta_{mn}).
inline double hermite_orthonormal(int m, double x) {
  double hm1 = 0.0, h = 1.0;
  for (int k = 0; k < m; ++k) {
    const double next = (x * h - std::sqrt(static_cast<double>(k)) * hm1) /
                        std::sqrt(static_cast<double>(k) + 1.0);
    hm1 = h;
    h = next;
  }
  return h;
}
}  // namespace detail

inline GaussHermiteRule gauss_hermite_rule(int m) {
  if (m < 1) throw domain_error("gauss_hermite_rule: need at least one node");
  std::vector<double> roots{};  // roots of h_1 are {0} after first pass
  for (int k = 1; k <= m; ++k) {
    std::vector<double> next(static_cast<size_t>(k));
    const double bound = 2.0 * std::sqrt(static_cast<double>(k)) + 2.0;
    for (int i = 0; i < k; ++i) {
      double lo = (i == 0) ? -bound : roots[static_cast<size_t>(i) - 1];
      double hi = (i == k - 1) ? bound : roots[static_cast<size_t>(i)];
      double flo = detail::hermite_orthonormal(k, lo);
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = detail::hermite_orthonormal(k, mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      double x = 0.5 * (lo + hi);
      for (int it = 0; it < 3; ++it) {  // Newton: h_k'(x) = sqrt(k) h_{k-1}(x)
        const double f = detail::hermite_orthonormal(k, x);
        const double df = std::sqrt(static_cast<double>(k)) * detail::hermite_orthonormal(k - 1, x);
        if (df != 0.0) x -= f / df;
      }
      next[static_cast<size_t>(i)] = x;
    }
    roots = std::move(next);
  }
  GaussHermiteRule rule;
  rule.nodes = roots;
  rule.weights.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      const double h = detail::hermite_orthonormal(k, rule.nodes[static_cast<size_t>(i)]);
      s += h * h;
    }
    rule.weights[static_cast<size_t>(i)] = 1.0 / s;
  }
  return rule;
}

}  // namespace dslt
