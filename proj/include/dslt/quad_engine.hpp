#pragma once

/// Adaptive 1-D Gauss-Kronrod 15(7) integration plus the fixed-panel
/// Gauss-Legendre helpers the multi-dimensional integrals are built from.
///
/// Deliberately no epsilon-extrapolation: the integrands this engine serves
/// have interior kinks (|x - u| powers, indicator edges) where extrapolation
/// mis-converges; callers pass known kink locations as initial split points
/// and the plain adaptive bisection does the rest.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "dslt/errors.hpp"

namespace dslt {

struct QuadOptions {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  int max_intervals = 2000;
};

struct QuadEstimate {
  double value = 0.0;
  double abs_err = 0.0;
  long evals = 0;
  bool converged = false;
};

namespace detail {

// Kronrod 15 nodes on [0,1] side of [-1,1] (symmetric) and weights; Gauss 7
// weights attach to the odd-index Kronrod nodes.
inline constexpr double gk15_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk15_wg[4] = {0.129484966168870, 0.279705391489277,
                                      0.381830050505119, 0.417959183673469};

struct Segment {
  double a, b;
  double value;
  double err;
  bool operator<(const Segment& o) const { return err < o.err; }
};

/// One GK15 evaluation on [a,b]; returns (value, error estimate) with the
/// QUADPACK-style damped error.
template <class F>
inline Segment gk15_segment(F& f, double a, double b, long& evals) {
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * gk15_nodes[i]);
    fv[14 - i] = f(c + h * gk15_nodes[i]);
  }
  fv[7] = f(c);
  evals += 15;
  double resk = 0.0, resabs = 0.0;
  for (int i = 0; i < 7; ++i) {
    resk += gk15_wk[i] * (fv[i] + fv[14 - i]);
    resabs += gk15_wk[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
  }
  resk += gk15_wk[7] * fv[7];
  resabs += gk15_wk[7] * std::abs(fv[7]);
  double resg = gk15_wg[3] * fv[7];
  for (int i = 0; i < 3; ++i)
    resg += gk15_wg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  const double mean = 0.5 * resk;
  double resasc = gk15_wk[7] * std::abs(fv[7] - mean);
  for (int i = 0; i < 7; ++i)
    resasc += gk15_wk[i] * (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
  double err = std::abs(resk - resg) * h;
  resasc *= h;
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  (void)resabs;
  return {a, b, resk * h, err};
}

}  // namespace detail

/// Adaptive GK15 on [a,b].  `interior` lists known kink/feature abscissae
/// used as the initial segmentation (values outside (a,b) are ignored).
template <class F>
QuadEstimate gk15_adaptive(F&& f, double a, double b, const QuadOptions& opt = {},
                           std::span<const double> interior = {}) {
  QuadEstimate out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  std::vector<double> cuts{a};
  for (double p : interior)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  // Duplicate hints would create zero-width segments whose rule evaluation
  // lands exactly on the hinted abscissa (often a singularity).
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::priority_queue<detail::Segment> heap;
  double total = 0.0, toterr = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto seg = detail::gk15_segment(f, cuts[i], cuts[i + 1], out.evals);
    total += seg.value;
    toterr += seg.err;
    heap.push(seg);
  }
  int n_seg = static_cast<int>(cuts.size()) - 1;
  while (n_seg < opt.max_intervals) {
    const double bound = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (toterr <= bound) break;
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // interval at floating-point resolution
      toterr -= worst.err;                   // cannot refine further; accept as-is
      continue;
    }
    auto left = detail::gk15_segment(f, worst.a, mid, out.evals);
    auto right = detail::gk15_segment(f, mid, worst.b, out.evals);
    total += left.value + right.value - worst.value;
    toterr += left.err + right.err - worst.err;
    heap.push(left);
    heap.push(right);
    ++n_seg;
  }
  out.value = total;
  out.abs_err = toterr;
  out.converged = toterr <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  return out;
}

/// Adaptive integral over [a, infinity) via x = a + v/(1-v), v in [0,1).
template <class F>
QuadEstimate gk15_halfline(F&& f, double a, const QuadOptions& opt = {},
                           std::span<const double> interior_x = {}) {
  auto g = [&f, a](double v) {
    const double w = 1.0 - v;
    if (w < 1e-14) return 0.0;
    return f(a + v / w) / (w * w);
  };
  std::vector<double> pts;
  for (double x : interior_x)
    if (x > a) pts.push_back((x - a) / (1.0 + x - a));
  return gk15_adaptive(g, 0.0, 1.0, opt, pts);
}

// ---------------------------------------------------------------------------
// Fixed Gauss-Legendre panels (non-adaptive building blocks).

namespace detail {
inline constexpr double gl8_nodes[4] = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
inline constexpr double gl8_weights[4] = {0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};
}  // namespace detail

/// 8-point Gauss-Legendre on [a,b].
template <class F>
double gl8(F&& f, double a, double b) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    s += detail::gl8_weights[i] *
         (f(c - h * detail::gl8_nodes[i]) + f(c + h * detail::gl8_nodes[i]));
  return s * h;
}

/// Composite GL8 over a given edge sequence.
template <class F>
double gl8_composite(F&& f, std::span<const double> edges) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < edges.size(); ++i) s += gl8(f, edges[i], edges[i + 1]);
  return s;
}

/// Fills the GL8 abscissae/weights for every panel of an edge sequence
/// (flat arrays; used by vectorized integrand evaluations).
inline void gl8_flatten(std::span<const double> edges, std::vector<double>& x,
                        std::vector<double>& w) {
  x.clear();
  w.clear();
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    const double h = 0.5 * (edges[i + 1] - edges[i]), c = 0.5 * (edges[i] + edges[i + 1]);
    for (int k = 3; k >= 0; --k) {
      x.push_back(c - h * detail::gl8_nodes[k]);
      w.push_back(h * detail::gl8_weights[k]);
    }
    for (int k = 0; k < 4; ++k) {
      x.push_back(c + h * detail::gl8_nodes[k]);
      w.push_back(h * detail::gl8_weights[k]);
    }
  }
}

/// Edges for [0, bmax] that resolve a boundary layer of width ~`scale` near 0:
/// cubically graded panels on [0, s0 = min(50 scale, bmax)] followed by
/// log-spaced panels out to bmax.
inline std::vector<double> graded_edges(double bmax, double scale, int n_power = 10,
                                        int n_log = 18) {
  std::vector<double> edges;
  const double s0 = std::min(50.0 * scale, bmax);
  edges.reserve(static_cast<size_t>(n_power + n_log) + 2);
  for (int i = 0; i <= n_power; ++i) {
    const double t = static_cast<double>(i) / n_power;
    edges.push_back(s0 * t * t * t);
  }
  if (s0 < bmax) {
    const double ratio = bmax / s0;
    for (int i = 1; i <= n_log; ++i)
      edges.push_back(s0 * std::pow(ratio, static_cast<double>(i) / n_log));
    edges.back() = bmax;
  }
  return edges;
}

}  // namespace dslt
