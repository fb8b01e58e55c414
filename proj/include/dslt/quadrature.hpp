#pragma once

/// Deterministic evaluation of the second-moment integrals and limit
/// constants: the variance decomposition V1+V2+V3 of E[alpha_eps^2], exact
/// chaos variances E[I_{2q-1}^2], and the constants sigma^2, sigma_q^2,
/// bar-sigma_q^2.
///
/// Geometry of every 3-D integral here: gap coordinates with the simplex
/// weight (T - sum of gaps)_+ or the reduced weight (T - max(u1, x+u2))_+.
/// Small-eps evaluations switch to edge-scaled coordinates (the two short
/// gaps measured in units of eps^{1/(2H)}), which turns the eps -> 0 boundary
/// layer into an O(1) ridge.  Two scalings in the S3 term are easy to
/// conflate: the *value* factor is eps^{-1/H} mu while the *determinant*
/// cross term is (mu/eps)^2; regression tests pin both.

#include <cmath>
#include <vector>

#include "dslt/errors.hpp"
#include "dslt/fbm_model.hpp"
#include "dslt/math_kernels.hpp"
#include "dslt/quad_engine.hpp"

namespace dslt {

struct QuadratureResult {
  double value = 0.0;
  double abs_err_est = 0.0;
  long evaluations = 0;
  bool converged = false;
};

struct AlphaVariance {
  QuadratureResult v1, v2, v3, total;
};

/// Closed form sigma^2 = T^{2H} (2H-1)/(4 H pi) B(1/H,(3H-2)/(2H))^2 B(2,2H-1),
/// the variance of the alpha CLT limit; valid for 2/3 < H < 1.
inline double sigma_squared(const HurstModel& model) {
  const double h = model.hurst;
  if (!(h > 2.0 / 3.0) || !(h < 1.0))
    throw domain_error("sigma_squared: requires 2/3 < H < 1");
  const double b1 = beta_fn(1.0 / h, (3.0 * h - 2.0) / (2.0 * h));
  return std::pow(model.horizon, 2.0 * h) * (2.0 * h - 1.0) / (4.0 * h * pi) * b1 * b1 *
         beta_fn(2.0, 2.0 * h - 1.0);
}

/// Independent route to sigma^2 through the tail-integral closed form:
/// (H(2H-1)/pi) * B(2,2H-1) T^{2H} * (int_0^inf a (1+a^{2H})^{-3/2} da)^2,
/// the last factor via lemma_beta_integral.  Used as a cross-check oracle.
inline double sigma_squared_via_lemma(const HurstModel& model) {
  const double h = model.hurst;
  if (!(h > 2.0 / 3.0) || !(h < 1.0))
    throw domain_error("sigma_squared_via_lemma: requires 2/3 < H < 1");
  const double tail = lemma_beta_integral(1.0, 2.0 * h, 1.0, -1.5);
  return h * (2.0 * h - 1.0) / pi * beta_fn(2.0, 2.0 * h - 1.0) *
         std::pow(model.horizon, 2.0 * h) * tail * tail;
}

namespace detail {

struct NestCtx {
  long evals = 0;
  int failures = 0;

  double take(const QuadEstimate& e) {
    if (!e.converged) ++failures;
    return e.value;
  }
};

/// GL8 nodes/weights mapped to [0,1].
struct Gl01 {
  double x[8], w[8];
  Gl01() {
    for (int k = 0; k < 4; ++k) {
      x[k] = 0.5 * (1.0 - gl8_nodes[3 - k]);
      w[k] = 0.5 * gl8_weights[3 - k];
      x[4 + k] = 0.5 * (1.0 + gl8_nodes[k]);
      w[4 + k] = 0.5 * gl8_weights[k];
    }
  }
};

inline const Gl01& gl01() {
  static const Gl01 g;
  return g;
}

inline QuadratureResult pack(double value, const QuadEstimate& outer, const NestCtx& ctx,
                             double tol) {
  QuadratureResult r;
  r.value = value;
  // Outer error plus an allowance for the inner-level noise the outer
  // estimate cannot see.
  r.abs_err_est = outer.abs_err + 5.0 * tol * std::abs(value);
  r.evaluations = ctx.evals;
  r.converged = outer.converged && ctx.failures == 0;
  return r;
}

/// Sigma entries of the three region integrands in gap coordinates (a,b,c).
/// S1 (nested-forward), S2 (nested), S3 (disjoint, cross-cov mu(a+b,a,c)).
inline Sym2 region_sigma(int region, const HurstModel& model, double a, double b, double c) {
  const double tw = model.two_h();
  Sym2 s;
  if (region == 1) {
    s.s11 = std::pow(a + b, tw);
    s.s22 = std::pow(b + c, tw);
    s.s12 = 0.5 * (std::pow(a + b + c, tw) + std::pow(b, tw) - std::pow(a, tw) -
                   std::pow(c, tw));
  } else if (region == 2) {
    s.s11 = std::pow(a + b + c, tw);
    s.s22 = std::pow(b, tw);
    s.s12 = 0.5 * (std::pow(a + b, tw) + std::pow(b + c, tw) - std::pow(a, tw) -
                   std::pow(c, tw));
  } else {
    s.s11 = std::pow(a, tw);
    s.s22 = std::pow(c, tw);
    s.s12 = (a > 0.0 && c > 0.0) ? mu_accurate(model, a + b, a, c) : 0.0;
  }
  return s;
}

/// V_region by direct nested quadrature over {a+b+c <= T}; reliable while the
/// eps boundary layer is resolvable (eps^{1/(2H)} not far below T/50).
inline QuadratureResult v_region_direct(int region, const HurstModel& model, double eps,
                                        double tol) {
  const double T = model.horizon;
  NestCtx ctx;
  const QuadOptions inner{tol, tol, 400};
  const QuadOptions mid{10.0 * tol, 10.0 * tol, 250};
  const QuadOptions outer{100.0 * tol, 100.0 * tol, 200};
  auto f_outer = [&](double a) {
    if (a >= T) return 0.0;
    auto f_mid = [&](double b) {
      const double cmax = T - a - b;
      if (cmax <= 0.0) return 0.0;
      auto f_inner = [&](double c) {
        ++ctx.evals;
        const double w = T - a - b - c;
        if (w <= 0.0) return 0.0;
        const Sym2 s = region_sigma(region, model, a, b, c);
        const double det = s.det_shifted(eps);
        if (det <= 0.0) return 0.0;
        return w * s.s12 / (det * std::sqrt(det));
      };
      return ctx.take(gk15_adaptive(f_inner, 0.0, cmax, inner));
    };
    return ctx.take(gk15_adaptive(f_mid, 0.0, T - a, mid));
  };
  const QuadEstimate est = gk15_adaptive(f_outer, 0.0, T, outer);
  ctx.evals += 0;
  return pack(est.value / pi, est, ctx, 100.0 * tol);
}

/// V1/V2 at small eps: edge-scaled a = eps^{1/(2H)} A, c = eps^{1/(2H)} C with
/// b unscaled; exact change of variables, integrand carries an O(1) ridge at
/// A, C ~ 1 instead of an eps-thin layer.
inline QuadratureResult v12_scaled(int region, const HurstModel& model, double eps,
                                   double tol) {
  const double T = model.horizon;
  const double ea = std::pow(eps, 1.0 / model.two_h());
  NestCtx ctx;
  const QuadOptions inner{tol, tol, 400};
  const QuadOptions mid{3.0 * tol, 3.0 * tol, 250};
  const QuadOptions outer{10.0 * tol, 10.0 * tol, 200};
  const double amax = T / ea;
  auto f_outer = [&](double va) {
    if (va >= 1.0 - 1e-14) return 0.0;
    const double a = va / (1.0 - va) * ea;
    if (a >= T) return 0.0;
    auto f_mid = [&](double b) {
      const double cmax = T - a - b;
      if (cmax <= 0.0) return 0.0;
      const double vcmax = (cmax / ea) / (1.0 + cmax / ea);
      auto f_inner = [&](double vc) {
        ++ctx.evals;
        if (vc >= 1.0 - 1e-14) return 0.0;
        const double c = vc / (1.0 - vc) * ea;
        const double w = T - a - b - c;
        if (w <= 0.0) return 0.0;
        const Sym2 s = region_sigma(region, model, a, b, c);
        const double det = s.det_shifted(eps);
        if (det <= 0.0) return 0.0;
        const double jac = ea / ((1.0 - vc) * (1.0 - vc));
        return w * s.s12 / (det * std::sqrt(det)) * jac;
      };
      return ctx.take(gk15_adaptive(f_inner, 0.0, vcmax, inner));
    };
    const double pts[] = {ea, 10.0 * ea, 100.0 * ea};
    const double v = ctx.take(gk15_adaptive(f_mid, 0.0, T - a, mid,
                                            std::span<const double>(pts, 3)));
    return v * ea / ((1.0 - va) * (1.0 - va));
  };
  const QuadEstimate est =
      gk15_adaptive(f_outer, 0.0, amax / (1.0 + amax), outer);
  return pack(est.value / pi, est, ctx, 10.0 * tol);
}

/// eps^{3-2/H} V3 in fully scaled S3 coordinates.  Value factor
/// M = eps^{-1/H} mu(b + ea A, ea A, ea C); determinant
/// D = (1+A^{2H})(1+C^{2H}) - eps^{2/H-2} M^2.  The b-integral is a fixed
/// composite GL8 rule on power+log graded panels resolving the ea-scale
/// layer; A and C are adaptive, compactified half-lines.
inline QuadratureResult v3_scaled(const HurstModel& model, double eps, double tol) {
  const double T = model.horizon;
  const double tw = model.two_h();
  const double ea = std::pow(eps, 1.0 / tw);
  const double pw = std::pow(eps, 2.0 / model.hurst - 2.0);
  const double hk = model.hurst * (tw - 1.0);
  const auto& g = gl01();
  NestCtx ctx;
  std::vector<double> edges, bx, bw;
  auto inner_b = [&](double A, double C) {
    const double bmax = T - ea * (A + C);
    if (bmax <= 0.0) return 0.0;
    edges = graded_edges(bmax, ea * (A + C + 1.0));
    gl8_flatten(edges, bx, bw);
    const double sep = 4.0 * ea * (A + C);
    const double d0 = (1.0 + std::pow(A, tw)) * (1.0 + std::pow(C, tw));
    double sum = 0.0;
    for (size_t k = 0; k < bx.size(); ++k) {
      const double b = bx[k];
      const double x = ea * A + b;
      double M;
      if (x > sep) {
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) {
          const double ai = ea * A * (1.0 - g.x[i]);
          double row = 0.0;
          for (int j = 0; j < 8; ++j)
            row += g.w[j] * std::pow(b + ai + ea * C * g.x[j], tw - 2.0);
          acc += g.w[i] * row;
        }
        M = hk * A * C * acc;
      } else {
        const double m = 0.5 * (std::pow(x + ea * C, tw) -
                                std::pow(std::abs(x + ea * C - ea * A), tw) -
                                std::pow(x, tw) + std::pow(std::abs(x - ea * A), tw));
        M = m / (ea * ea);
      }
      const double det = d0 - pw * M * M;
      if (det <= 0.0) continue;
      sum += bw[k] * (bmax - b) * M / (det * std::sqrt(det));
    }
    ctx.evals += static_cast<long>(bx.size());
    return sum;
  };
  const QuadOptions mid{tol, tol, 300};
  const QuadOptions outer{3.0 * tol, 3.0 * tol, 200};
  auto f_outer = [&](double va) {
    if (va >= 1.0 - 1e-14) return 0.0;
    const double A = va / (1.0 - va);
    if (ea * A >= T) return 0.0;
    const double cmax = T / ea - A;
    const double vcmax = cmax / (1.0 + cmax);
    auto f_mid = [&](double vc) {
      if (vc >= 1.0 - 1e-14) return 0.0;
      const double C = vc / (1.0 - vc);
      return inner_b(A, C) / ((1.0 - vc) * (1.0 - vc));
    };
    const double v = ctx.take(gk15_adaptive(f_mid, 0.0, vcmax, mid));
    return v / ((1.0 - va) * (1.0 - va));
  };
  const double amax = T / ea;
  const QuadEstimate est = gk15_adaptive(f_outer, 0.0, amax / (1.0 + amax), outer);
  return pack(est.value / pi, est, ctx, 3.0 * tol);
}

/// eps^{3-2/H} E[I_1(f_{1,eps})^2] in the same edge-scaled coordinates
/// (u1 = ea A, u2 = ea C, x unscaled), with the reduced weight
/// (T - max(u1, x+u2))_+ and denominator ((1+A^{2H})(1+C^{2H}))^{3/2}.
inline QuadratureResult ei1_scaled(const HurstModel& model, double eps, double tol) {
  const double T = model.horizon;
  const double tw = model.two_h();
  const double ea = std::pow(eps, 1.0 / tw);
  const double hk = model.hurst * (tw - 1.0);
  const auto& g = gl01();
  NestCtx ctx;
  std::vector<double> edges, xx, xw;
  auto inner_x = [&](double A, double C) {
    if (ea * A >= T || ea * C >= T) return 0.0;
    const double xmax = T - ea * C;
    edges = graded_edges(xmax, ea * (A + C + 1.0));
    gl8_flatten(edges, xx, xw);
    const double sep = 4.0 * ea * (A + C);
    double sum = 0.0;
    for (size_t k = 0; k < xx.size(); ++k) {
      const double x = xx[k];
      const double wt = T - std::max(ea * A, x + ea * C);
      if (wt <= 0.0) continue;
      double N;
      if (x > sep) {
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) {
          const double ai = ea * A * g.x[i];
          double row = 0.0;
          for (int j = 0; j < 8; ++j)
            row += g.w[j] * std::pow(x - ai + ea * C * g.x[j], tw - 2.0);
          acc += g.w[i] * row;
        }
        N = hk * A * C * acc;
      } else {
        const double m = 0.5 * (std::pow(x + ea * C, tw) -
                                std::pow(std::abs(x + ea * C - ea * A), tw) -
                                std::pow(x, tw) + std::pow(std::abs(x - ea * A), tw));
        N = m / (ea * ea);
      }
      sum += xw[k] * wt * N;
    }
    ctx.evals += static_cast<long>(xx.size());
    const double den = (1.0 + std::pow(A, tw)) * (1.0 + std::pow(C, tw));
    return sum / (den * std::sqrt(den));
  };
  const QuadOptions mid{tol, tol, 300};
  const QuadOptions outer{3.0 * tol, 3.0 * tol, 200};
  auto f_outer = [&](double va) {
    if (va >= 1.0 - 1e-14) return 0.0;
    const double A = va / (1.0 - va);
    if (ea * A >= T) return 0.0;
    const double cmax = T / ea;
    const double vcmax = cmax / (1.0 + cmax);
    auto f_mid = [&](double vc) {
      if (vc >= 1.0 - 1e-14) return 0.0;
      const double C = vc / (1.0 - vc);
      return inner_x(A, C) / ((1.0 - vc) * (1.0 - vc));
    };
    const double v = ctx.take(gk15_adaptive(f_mid, 0.0, vcmax, mid));
    return v / ((1.0 - va) * (1.0 - va));
  };
  const double amax = T / ea;
  const QuadEstimate est = gk15_adaptive(f_outer, 0.0, amax / (1.0 + amax), outer);
  return pack(est.value / pi, est, ctx, 3.0 * tol);
}

/// E[I_{2q-1}(f_{2q-1,eps})^2] by the reduced 3-D integral
///   2(2q-1)! beta_q^2 int (T-max(u1,x+u2))_+ G_{eps,x}(u1,u2) dx du1 du2,
/// x innermost with kink hints {u1-u2, u1}.
inline QuadratureResult chaos_var_direct(int q, const HurstModel& model, double eps,
                                         double tol) {
  const double T = model.horizon;
  const double tw = model.two_h();
  NestCtx ctx;
  const QuadOptions inner{tol, tol, 400};
  const QuadOptions mid{3.0 * tol, 3.0 * tol, 250};
  const QuadOptions outer{10.0 * tol, 10.0 * tol, 200};
  const int deg = 2 * q - 1;
  auto f_outer = [&](double u1) {
    if (u1 <= 0.0 || u1 >= T) return 0.0;
    auto f_mid = [&](double u2) {
      if (u2 <= 0.0) return 0.0;
      const double hi = T - u2;
      if (hi <= 0.0) return 0.0;
      auto f_inner = [&](double x) {
        ++ctx.evals;
        const double wt = T - std::max(u1, x + u2);
        if (wt <= 0.0) return 0.0;
        const double m = detail::mu_accurate(model, x, u1, u2);
        return wt * std::pow(m, deg);
      };
      const double pts[] = {u1 - u2, u1};
      const double v = ctx.take(
          gk15_adaptive(f_inner, 0.0, hi, inner, std::span<const double>(pts, 2)));
      return v / std::pow((eps + std::pow(u1, tw)) * (eps + std::pow(u2, tw)),
                          q + 0.5);
    };
    return ctx.take(gk15_adaptive(f_mid, 0.0, T, mid));
  };
  const QuadEstimate est = gk15_adaptive(f_outer, 0.0, T, outer);
  const double beta = ChaosKernelSpec::beta_q_for(q);
  const double pref = 2.0 * std::tgamma(2.0 * q) * beta * beta;
  QuadratureResult r = pack(est.value, est, ctx, 10.0 * tol);
  r.value *= pref;
  r.abs_err_est *= pref;
  return r;
}

}  // namespace detail

/// True when the eps boundary layer is thin enough that the edge-scaled
/// evaluators are both faster and more accurate than direct quadrature.
inline bool quadrature_uses_scaled_coordinates(const HurstModel& model, double eps) {
  return std::pow(eps, 1.0 / model.two_h()) < model.horizon / 50.0;
}

/// E[I_1(f_{1,eps})^2] (the first-chaos variance; 2 beta_1^2 = 1/pi).
inline QuadratureResult exact_first_chaos_variance(const HurstModel& model, double eps,
                                                   double tol = 3e-6) {
  if (!(eps > 0.0)) throw domain_error("exact_first_chaos_variance: eps must be > 0");
  if (!model.in_alpha_window())
    throw domain_error("exact_first_chaos_variance: requires 2/3 < H < 1");
  if (quadrature_uses_scaled_coordinates(model, eps)) {
    QuadratureResult r = detail::ei1_scaled(model, eps, tol);
    const double unscale = std::pow(eps, 2.0 / model.hurst - 3.0);
    r.value *= unscale;
    r.abs_err_est *= unscale;
    return r;
  }
  return detail::chaos_var_direct(1, model, eps, tol);
}

/// The variance decomposition E[alpha_eps^2] = V1 + V2 + V3 over the three
/// increment-pair orderings, each as its own QuadratureResult.
inline AlphaVariance exact_alpha_variance(const HurstModel& model, double eps,
                                          double tol = 1e-7) {
  if (!(eps > 0.0)) throw domain_error("exact_alpha_variance: eps must be > 0");
  if (!(model.hurst > 0.5)) throw domain_error("exact_alpha_variance: requires H > 1/2");
  AlphaVariance out;
  if (quadrature_uses_scaled_coordinates(model, eps)) {
    out.v1 = detail::v12_scaled(1, model, eps, tol);
    out.v2 = detail::v12_scaled(2, model, eps, tol);
    out.v3 = detail::v3_scaled(model, eps, std::max(tol, 1e-6));
    const double unscale = std::pow(eps, 2.0 / model.hurst - 3.0);
    out.v3.value *= unscale;
    out.v3.abs_err_est *= unscale;
  } else {
    out.v1 = detail::v_region_direct(1, model, eps, tol * 0.1);
    out.v2 = detail::v_region_direct(2, model, eps, tol * 0.1);
    out.v3 = detail::v_region_direct(3, model, eps, tol * 0.1);
  }
  out.total.value = out.v1.value + out.v2.value + out.v3.value;
  out.total.abs_err_est = out.v1.abs_err_est + out.v2.abs_err_est + out.v3.abs_err_est;
  out.total.evaluations = out.v1.evaluations + out.v2.evaluations + out.v3.evaluations;
  out.total.converged = out.v1.converged && out.v2.converged && out.v3.converged;
  return out;
}

/// E[I_{2q-1}(f_{2q-1,eps})^2] for any q >= 1.
inline QuadratureResult exact_chaos_variance(const ChaosKernelSpec& spec,
                                             double tol = 3e-6) {
  if (spec.q == 1) return exact_first_chaos_variance(spec.model, spec.eps, tol);
  return detail::chaos_var_direct(spec.q, spec.model, spec.eps, tol);
}

/// bar-sigma_q^2 = 2(2q-1)! beta_q^2 int (T-max(u1,x+u2))_+ G_{0,x}(u1,u2),
/// the eps -> 0 chaos-variance limit in the 2/3 < H < 3/4 regime.  The
/// eps = 0 corner singularity (u1 u2)^{-2H(q+1/2)} is tamed by u = w^2 on
/// both axes plus geometric GL8 panels in w down to sqrt(T) 1e-12: the
/// corner density falls off only like a small negative power of w, which
/// graded panels integrate geometrically fast where plain bisection stalls.
inline QuadratureResult sigma_q_bar_squared(const ChaosKernelSpec& spec,
                                            double tol = 3e-6) {
  const HurstModel& model = spec.model;
  const int q = spec.q;
  if (q < 2) throw domain_error("sigma_q_bar_squared: requires q >= 2");
  model.require_noncritical(q);
  if (!model.in_l2_window())
    throw domain_error("sigma_q_bar_squared: requires 2/3 < H < 3/4 (finiteness window)");
  const double T = model.horizon;
  const double tw = model.two_h();
  const double p = tw * (q + 0.5);
  const int deg = 2 * q - 1;
  detail::NestCtx ctx;
  const double xtol = tol / 3.0;
  const QuadOptions xopt{xtol, xtol, 300};
  const double sq_t = std::sqrt(T);
  std::vector<double> edges{0.0};
  const int per_decade = 4;
  for (double w = sq_t * 1e-12; w < sq_t; w *= std::pow(10.0, 1.0 / per_decade))
    edges.push_back(w);
  edges.push_back(sq_t);
  std::vector<double> wx, ww;
  gl8_flatten(edges, wx, ww);
  double total = 0.0, xerr = 0.0;
  for (size_t i = 0; i < wx.size(); ++i) {
    const double u1 = wx[i] * wx[i];
    for (size_t j = 0; j < wx.size(); ++j) {
      const double u2 = wx[j] * wx[j];
      const double hi = T - u2;
      if (hi <= 0.0) continue;
      auto f = [&](double x) {
        ++ctx.evals;
        const double wt = T - std::max(u1, x + u2);
        if (wt <= 0.0) return 0.0;
        const double m = detail::mu_accurate(model, x, u1, u2);
        return wt * std::pow(m, deg);
      };
      const double pts[] = {u1 - u2, u1};
      const QuadEstimate e =
          gk15_adaptive(f, 0.0, hi, xopt, std::span<const double>(pts, 2));
      if (!e.converged) ++ctx.failures;
      const double wgt = ww[i] * ww[j] * std::pow(u1 * u2, -p) * 4.0 * wx[i] * wx[j];
      total += wgt * e.value;
      xerr += std::abs(wgt) * e.abs_err;
    }
  }
  const double beta = ChaosKernelSpec::beta_q_for(q);
  const double pref = 2.0 * std::tgamma(2.0 * q) * beta * beta;
  QuadratureResult r;
  r.value = pref * total;
  r.abs_err_est = pref * xerr + 5.0 * tol * std::abs(r.value);
  r.evaluations = ctx.evals;
  r.converged = ctx.failures == 0;
  return r;
}

/// sigma_q^2 = 2(2q-1)! beta_q^2 T int_{R_+^3} G_{1,x}(u1,u2) dx du1 du2, the
/// chaos CLT variance in the 3/4 < H < (4q-3)/(4q-2) regime.
///
/// The integrand carries a diagonal ridge u2 ~ u1 -> infinity (there
/// mu ~ u1^{2H}, far larger than the off-diagonal decay), which nested
/// rectangular orderings under-resolve badly.  Exploiting the exact
/// self-similarity mu(lx, lu1, lu2) = l^{2H} mu(x, u1, u2), the ratio
/// coordinates (u1, r = u2/u1, y = x/u1) factorize the integral:
///
///   sigma_q^2 = pref T int_0^inf Phi_q(r) W(r) dr,
///   Phi_q(r)  = int_0^inf mu(y, 1, r)^{2q-1} dy,
///   W(r)      = int_0^inf u^{2H(2q-1)+2} ((1+u^{2H})(1+(ru)^{2H}))^{-q-1/2} du,
///
/// so the ridge becomes the axis point r = 1 and every factor is 1-D.  All
/// three infinite tails decay by known powers (y^{-(2-2H)(2q-1)},
/// u^{-(4H-2)}, r^{-[2H(q+1/2)-(2H-1)(2q-1)-1]}, all exponents > 1 exactly on
/// the open window) and get power substitutions s = s0 t^{-p}; the r -> 0
/// endpoint behaves like r^{e0} with e0 in (-1,0) and gets r = rho^k.
inline QuadratureResult sigma_q_squared(const ChaosKernelSpec& spec, double tol = 1e-6) {
  const HurstModel& model = spec.model;
  const int q = spec.q;
  if (q < 2) throw domain_error("sigma_q_squared: requires q >= 2");
  model.require_noncritical(q);
  if (!model.in_chaos_clt_window(q))
    throw domain_error("sigma_q_squared: requires 3/4 < H < (4q-3)/(4q-2) (finiteness window)");
  const double tw = model.two_h();
  const int deg = 2 * q - 1;
  const double hq = q + 0.5;
  const double b_exp = tw * deg + 2.0;        // u-power in W
  const double tau_y = (2.0 - tw) * deg;      // y-tail of Phi
  const double tau_u = 2.0 * tw - 2.0;        // u-tail of W: 4H-2 > 1 iff H > 3/4
  const double tau_r = tw * hq - (tw - 1.0) * deg - 1.0;  // r-tail of Phi*W
  const double e0 = deg + tw * hq - b_exp - 1.0;          // r -> 0 exponent, in (-1,0)
  const double p_y = std::clamp(4.0 / (tau_y - 1.0), 8.0, 40.0);
  const double p_u = std::clamp(4.0 / (tau_u - 1.0), 6.0, 40.0);
  const double p_r = std::clamp(4.0 / (tau_r - 1.0), 6.0, 40.0);
  const double k0 = std::clamp(std::ceil(4.0 / (1.0 + e0)), 4.0, 40.0);
  detail::NestCtx ctx;
  const QuadOptions inner{tol, tol, 400};
  const QuadOptions outer{10.0 * tol, 10.0 * tol, 300};

  // F(a,b) = int_0^inf mu(y,a,b)^deg dy; called with max(a,b) = 1.
  auto mu_pow_integral = [&](double a, double b) {
    auto f = [&](double y) {
      ++ctx.evals;
      return std::pow(detail::mu_accurate(model, y, a, b), deg);
    };
    const double x1 = a + b;
    const double pts[] = {a - b, a};
    const double near = ctx.take(
        gk15_adaptive(f, 0.0, x1, inner, std::span<const double>(pts, 2)));
    const double x0 = x1 + 1.0;
    const double body = ctx.take(gk15_adaptive(f, x1, x0, inner));
    auto tail_f = [&](double t) {
      if (t <= 1e-3) return 0.0;  // truncates beyond y ~ 1e120: relative ~1e-12
      const double y = x0 * std::pow(t, -p_y);
      return f(y) * p_y * x0 * std::pow(t, -p_y - 1.0);
    };
    const double tail = ctx.take(gk15_adaptive(tail_f, 0.0, 1.0, inner));
    return near + body + tail;
  };
  auto phi = [&](double r) {
    if (r <= 1.0) return mu_pow_integral(1.0, r);
    // scaling identity: Phi(r) = r^{2H(2q-1)+1} Phi-tilde(1/r)
    return std::pow(r, tw * deg + 1.0) * mu_pow_integral(1.0 / r, 1.0);
  };
  // log(1+exp(l)) without overflow, for the log-space W integrand.
  auto softplus = [](double l) {
    return l > 0.0 ? l + std::log1p(std::exp(-l)) : std::log1p(std::exp(l));
  };
  auto w_fn = [&](double r) {
    const double log_r = std::log(r);
    auto f = [&](double u) {
      ++ctx.evals;
      if (u <= 0.0) return 0.0;
      const double lu = std::log(u);
      const double lg =
          b_exp * lu - hq * (softplus(tw * lu) + softplus(tw * (lu + log_r)));
      return std::exp(lg);
    };
    const double u_hi = 1.0 / std::min(r, 1.0);
    const double u0 = 4.0 * u_hi;
    const double pts[] = {std::min(1.0, u_hi), std::max(1.0, u_hi)};
    const double body = ctx.take(
        gk15_adaptive(f, 0.0, u0, inner, std::span<const double>(pts, 2)));
    auto tail_f = [&](double t) {
      if (t <= 1e-3) return 0.0;
      const double u = u0 * std::pow(t, -p_u);
      return f(u) * p_u * u0 * std::pow(t, -p_u - 1.0);
    };
    const double tail = ctx.take(gk15_adaptive(tail_f, 0.0, 1.0, inner));
    return body + tail;
  };

  const double r0 = 4.0;
  auto near_f = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double r = std::pow(rho, k0);
    if (r <= 0.0) return 0.0;
    return phi(r) * w_fn(r) * k0 * std::pow(rho, k0 - 1.0);
  };
  const double rho_kink = 1.0;  // image of the ridge r = 1
  const double kinks[] = {rho_kink};
  const QuadEstimate est_near =
      gk15_adaptive(near_f, 0.0, std::pow(r0, 1.0 / k0), outer,
                    std::span<const double>(kinks, 1));
  auto tail_f = [&](double t) {
    if (t <= 1e-3) return 0.0;
    const double r = r0 * std::pow(t, -p_r);
    if (r > 1e40) return 0.0;  // relative truncation ~1e-8, avoids pow overflow
    return phi(r) * w_fn(r) * p_r * r0 * std::pow(t, -p_r - 1.0);
  };
  const QuadEstimate est_tail = gk15_adaptive(tail_f, 0.0, 1.0, outer);
  QuadEstimate est;
  est.value = est_near.value + est_tail.value;
  est.abs_err = est_near.abs_err + est_tail.abs_err;
  est.evals = est_near.evals + est_tail.evals;
  est.converged = est_near.converged && est_tail.converged;
  const double beta = ChaosKernelSpec::beta_q_for(q);
  const double pref = 2.0 * std::tgamma(2.0 * q) * beta * beta * model.horizon;
  QuadratureResult r = detail::pack(est.value, est, ctx, 10.0 * tol);
  r.value *= pref;
  r.abs_err_est *= pref;
  return r;
}

}  // namespace dslt
