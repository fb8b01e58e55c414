#pragma once

/// Closed-form fractional-Brownian-motion covariance machinery: the pair
/// covariance, the increment cross-covariance mu, increment covariance
/// matrices, the weight function G of the chaos-variance integrals, the chaos
/// coefficients beta_q, and local-nondeterminism diagnostics.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dslt/errors.hpp"
#include "dslt/math_kernels.hpp"
#include "dslt/quad_engine.hpp"

namespace dslt {

/// Hurst exponent + horizon, with the regime bookkeeping every other module
/// leans on.  The limit theorems live in 2/3 < H < 1; the critical values
/// 2/3, 3/4 and (4q-3)/(4q-2) are excluded regimes and queries exactly at
/// them are rejected rather than silently computed.
struct HurstModel {
  double hurst = 0.5;
  double horizon = 1.0;

  HurstModel(double hurst_, double horizon_) : hurst(hurst_), horizon(horizon_) {
    if (!(hurst > 0.0) || !(hurst < 1.0))
      throw domain_error("HurstModel: need 0 < H < 1");
    if (!(horizon > 0.0)) throw domain_error("HurstModel: need T > 0");
  }

  double two_h() const { return 2.0 * hurst; }

  static bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

  /// True iff H sits (to 1e-12) on a critical value for chaos index q.
  bool is_critical(int q) const {
    if (near(hurst, 2.0 / 3.0) || near(hurst, 0.75)) return true;
    if (q >= 2 && near(hurst, (4.0 * q - 3.0) / (4.0 * q - 2.0))) return true;
    return false;
  }

  void require_noncritical(int q) const {
    if (is_critical(q))
      throw critical_hurst_error(
          "H = " + std::to_string(hurst) +
          " is an excluded critical value (2/3, 3/4 or (4q-3)/(4q-2))");
  }

  /// Window 2/3 < H < 1 of the alpha CLT.
  bool in_alpha_window() const { return hurst > 2.0 / 3.0 && hurst < 1.0; }
  /// Window 2/3 < H < 3/4 of the chaos L2-limit regime.
  bool in_l2_window() const { return hurst > 2.0 / 3.0 && hurst < 0.75; }
  /// Window 3/4 < H < (4q-3)/(4q-2) of the chaos CLT regime.
  bool in_chaos_clt_window(int q) const {
    return hurst > 0.75 && hurst < (4.0 * q - 3.0) / (4.0 * q - 2.0);
  }
};

/// Two increments (B_{t1}-B_{s1}, B_{t2}-B_{s2}) with s1 <= s2; classified
/// into the three orderings the variance decomposition integrates over.
struct IncrementPair {
  double s1, t1, s2, t2;

  enum class Region { S1, S2, S3 };  // nested-forward, nested, disjoint

  IncrementPair(double s1_, double t1_, double s2_, double t2_)
      : s1(s1_), t1(t1_), s2(s2_), t2(t2_) {
    if (!(s1 >= 0.0) || !(s2 >= 0.0)) throw domain_error("IncrementPair: negative time");
    if (!(s1 <= t1) || !(s2 <= t2)) throw domain_error("IncrementPair: need s <= t");
    if (!(s1 <= s2)) throw domain_error("IncrementPair: need s1 <= s2");
  }

  /// S1: s1<=s2<=t1<=t2, S2: s1<=s2<=t2<=t1, S3: s1<=t1<=s2<=t2;
  /// ties go to the lowest-index region.
  Region classify() const {
    if (s2 <= t1) return (t1 <= t2) ? Region::S1 : Region::S2;
    return Region::S3;
  }
};

/// Chaos level bundle: the (2q-1)-st chaos of the DSLT approximation at
/// regularization eps, together with its combinatorial constant and the two
/// theorem scaling exponents.
struct ChaosKernelSpec {
  int q;
  double eps;
  HurstModel model;

  ChaosKernelSpec(int q_, double eps_, HurstModel model_)
      : q(q_), eps(eps_), model(model_) {
    if (q < 1) throw domain_error("ChaosKernelSpec: q must be >= 1");
    if (!(eps > 0.0)) throw domain_error("ChaosKernelSpec: eps must be > 0");
  }

  /// beta_q = 1 / (2^{q-1/2} (q-1)! sqrt(pi)).
  double beta_q() const { return beta_q_for(q); }

  static double beta_q_for(int q) {
    return std::exp(-((q - 0.5) * std::log(2.0) + std::lgamma(static_cast<double>(q)) +
                      0.5 * std::log(pi)));
  }

  /// Exponent of the alpha CLT scaling eps^{3/2 - 1/H}.
  double scaling_exponent_alpha() const { return 1.5 - 1.0 / model.hurst; }
  /// Exponent of the chaos CLT scaling eps^{1 - 3/(4H)}.
  double scaling_exponent_chaos() const { return 1.0 - 0.75 / model.hurst; }
};

/// Covariance (1/2)(t^{2H} + s^{2H} - |t-s|^{2H}).
inline double covariance(const HurstModel& model, double t, double s) {
  if (!(t >= 0.0) || !(s >= 0.0)) throw domain_error("covariance: negative time");
  const double a = model.two_h();
  return 0.5 * (std::pow(t, a) + std::pow(s, a) - std::pow(std::abs(t - s), a));
}

/// mu(x, u1, u2) = E[B_{u1} (B_{x+u2} - B_x)], closed form
/// (1/2)((x+u2)^{2H} - |x+u2-u1|^{2H} - x^{2H} + |x-u1|^{2H}).
inline double mu(const HurstModel& model, double x, double u1, double u2) {
  if (!(x >= 0.0)) throw domain_error("mu: lag x must be >= 0");
  if (!(u1 > 0.0) || !(u2 > 0.0)) throw domain_error("mu: lengths must be > 0");
  const double a = model.two_h();
  return 0.5 * (std::pow(x + u2, a) - std::pow(std::abs(x + u2 - u1), a) -
                std::pow(x, a) + std::pow(std::abs(x - u1), a));
}

namespace detail {

/// Kernel representation mu = H(2H-1) u1 u2 int_{[0,1]^2} (x + u2 v2 - u1 v1)^{2H-2},
/// evaluated by an 8x8 Gauss-Legendre tensor rule.  Only valid (and only
/// used) well away from the singular line, x > u1: there the closed form
/// cancels catastrophically while this form is a smooth positive integral.
inline double mu_farfield(const HurstModel& model, double x, double u1, double u2) {
  const double e = model.two_h() - 2.0;
  const double s = gl8(
      [&](double v1) {
        return gl8([&](double v2) { return std::pow(x + u2 * v2 - u1 * v1, e); }, 0.0, 1.0);
      },
      0.0, 1.0);
  return model.hurst * (model.two_h() - 1.0) * u1 * u2 * s;
}

/// Deep far field x >> u1+u2: third-order expansion of the kernel integral
/// around (x + d)^{2H-2}, d = u2 v2 - u1 v1, with exact moments of d over the
/// unit square.  Relative truncation error ~ ((u1+u2)/x)^4.
inline double mu_asymptotic(const HurstModel& model, double x, double u1, double u2) {
  const double e = model.two_h() - 2.0;
  const double m1 = 0.5 * (u2 - u1);
  const double m2 = u2 * u2 / 3.0 - 0.5 * u1 * u2 + u1 * u1 / 3.0;
  const double m3 = 0.25 * (u2 * u2 * u2 - u1 * u1 * u1) - 0.5 * u1 * u2 * (u2 - u1);
  const double c1 = e / x;
  const double c2 = e * (e - 1.0) / (2.0 * x * x);
  const double c3 = e * (e - 1.0) * (e - 2.0) / (6.0 * x * x * x);
  return model.hurst * (model.two_h() - 1.0) * u1 * u2 * std::pow(x, e) *
         (1.0 + c1 * m1 + c2 * m2 + c3 * m3);
}

/// |t|^{2H} - |t-h|^{2H} for h > 0, stable for h much smaller than |t| via
/// expm1/log1p instead of subtracting nearly equal powers.
inline double stable_pow_diff(double tw, double t, double h) {
  if (t > 0.0 && t > h) {
    if (h < 0.5 * t) return -std::pow(t, tw) * std::expm1(tw * std::log1p(-h / t));
    return std::pow(t, tw) - std::pow(t - h, tw);
  }
  if (t <= 0.0) {
    const double a = -t;  // |t|; |t-h| = a + h
    if (a == 0.0) return -std::pow(h, tw);
    if (h < 0.5 * a) return -std::pow(a, tw) * std::expm1(tw * std::log1p(h / a));
    return std::pow(a, tw) - std::pow(a + h, tw);
  }
  // 0 < t < h: the two magnitudes are unrelated, no relative cancellation.
  return std::pow(t, tw) - std::pow(h - t, tw);
}

/// Cancellation-aware mu.  The closed form is a second difference and loses
/// all digits whenever u1 or u2 is tiny relative to the largest scale; the
/// kernel rule handles the far field, stable single differences handle the
/// one-small-increment cases, and the plain closed form the balanced case.
inline double mu_accurate(const HurstModel& model, double x, double u1, double u2) {
  const double usum = u1 + u2;
  if (x > 1000.0 * usum) return mu_asymptotic(model, x, u1, u2);
  if (x > 4.0 * usum) return mu_farfield(model, x, u1, u2);
  const double tw = model.two_h();
  const double scale = std::max(x, std::max(u1, u2));
  if (std::min(u1, u2) >= 0.125 * scale) return mu(model, x, u1, u2);
  if (u1 <= u2)
    return 0.5 * (stable_pow_diff(tw, x + u2, u1) - stable_pow_diff(tw, x, u1));
  return 0.5 * (stable_pow_diff(tw, x + u2, u2) - stable_pow_diff(tw, x - u1 + u2, u2));
}

}  // namespace detail

/// E[(B_{t1}-B_{s1})(B_{t2}-B_{s2})] = mu(s2-s1, t1-s1, t2-s2); valid in all
/// three region classes by bilinearity.  Degenerate increments give 0.
inline double increment_cross_cov(const HurstModel& model, const IncrementPair& pair) {
  const double u1 = pair.t1 - pair.s1, u2 = pair.t2 - pair.s2;
  if (u1 == 0.0 || u2 == 0.0) return 0.0;
  return mu(model, pair.s2 - pair.s1, u1, u2);
}

/// Symmetric 2x2 covariance of an increment pair.
struct Sym2 {
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;

  double det() const { return s11 * s22 - s12 * s12; }

  /// det(eps I + Sigma) in the cancellation-stable expanded form.
  double det_shifted(double eps) const {
    return eps * eps + eps * (s11 + s22) + det();
  }
};

inline Sym2 sigma_matrix(const HurstModel& model, const IncrementPair& pair) {
  const double a = model.two_h();
  Sym2 s;
  s.s11 = std::pow(pair.t1 - pair.s1, a);
  s.s22 = std::pow(pair.t2 - pair.s2, a);
  s.s12 = increment_cross_cov(model, pair);
  return s;
}

/// G_{eps,x}(u1, u2) = (eps+u1^{2H})^{-1/2-q} (eps+u2^{2H})^{-1/2-q} mu(x,u1,u2)^{2q-1}.
/// eps = 0 is allowed (the bar-sigma_q^2 integrals) as long as u1, u2 > 0.
inline double g_function(const ChaosKernelSpec& spec, double x, double u1, double u2,
                         double eps_override) {
  if (!(eps_override >= 0.0)) throw domain_error("g_function: eps must be >= 0");
  if (eps_override == 0.0 && (u1 <= 0.0 || u2 <= 0.0))
    throw singularity_error("g_function: eps = 0 with vanishing increment length");
  const double a = spec.model.two_h();
  const double p = -(0.5 + spec.q);
  const double m = detail::mu_accurate(spec.model, x, u1, u2);
  return std::pow(eps_override + std::pow(u1, a), p) *
         std::pow(eps_override + std::pow(u2, a), p) *
         std::pow(m, 2 * spec.q - 1);
}

inline double g_function(const ChaosKernelSpec& spec, double x, double u1, double u2) {
  return g_function(spec, x, u1, u2, spec.eps);
}

/// Which configuration class a local-nondeterminism scan expects.
enum class NondetClass {
  nested,   // s1 < s2 < t2 < t1
  disjoint  // s1 < t1 < s2 < t2
};

struct NondetReport {
  double min_ratio_basic = std::numeric_limits<double>::infinity();
  double min_ratio_nested = std::numeric_limits<double>::infinity();  // nested class only
  long violations = 0;  // ratios <= 0 (would contradict local nondeterminism)
  long n_pairs = 0;
};

/// Scans det Sigma / (Sigma11 Sigma22) over the sample, and for the nested
/// class additionally det Sigma / ((a+b)^{2H} c^{2H} + (b+c)^{2H} a^{2H}).
/// The lower-bound constant delta is *estimated* (reported as the min), never
/// asserted at a specific value.
inline NondetReport local_nondeterminism_check(const HurstModel& model,
                                               std::span<const IncrementPair> pairs,
                                               NondetClass config_class) {
  NondetReport rep;
  const double a = model.two_h();
  for (const auto& p : pairs) {
    if (config_class == NondetClass::nested) {
      if (!(p.s1 < p.s2 && p.s2 < p.t2 && p.t2 < p.t1))
        throw domain_error("local_nondeterminism_check: pair not in nested class");
    } else {
      if (!(p.s1 < p.t1 && p.t1 < p.s2 && p.s2 < p.t2))
        throw domain_error("local_nondeterminism_check: pair not in disjoint class");
    }
    const Sym2 s = sigma_matrix(model, p);
    const double det = s.det();
    const double basic = det / (s.s11 * s.s22);
    rep.min_ratio_basic = std::min(rep.min_ratio_basic, basic);
    if (basic <= 0.0) ++rep.violations;
    if (config_class == NondetClass::nested) {
      const double ga = p.s2 - p.s1, gb = p.t2 - p.s2, gc = p.t1 - p.t2;
      const double denom =
          std::pow(ga + gb, a) * std::pow(gc, a) + std::pow(gb + gc, a) * std::pow(ga, a);
      const double nested = det / denom;
      rep.min_ratio_nested = std::min(rep.min_ratio_nested, nested);
      if (nested <= 0.0) ++rep.violations;
    }
    ++rep.n_pairs;
  }
  return rep;
}

}  // namespace dslt
