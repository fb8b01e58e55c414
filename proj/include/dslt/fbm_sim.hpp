#pragma once

/// Exact sampling of fBm paths on uniform grids.  Fast path: circulant
/// embedding of the fractional-Gaussian-noise autocovariance (two FFTs per
/// path, exact law).  Oracle path: dense Cholesky of the fGn covariance for
/// small n.  One eigenvalue / factor table is cached per (H, n, dt) and
/// shared; per-thread samplers own their FFT plans and buffers.

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "dslt/errors.hpp"
#include "dslt/fbm_model.hpp"
#include "dslt/rng.hpp"

namespace dslt {

/// Uniform grid t_k = k dt, k = 0..n, dt = T/n.
struct GridSpec {
  int n;
  double horizon;

  GridSpec(int n_, double horizon_) : n(n_), horizon(horizon_) {
    if (n < 2) throw domain_error("GridSpec: need at least 2 steps");
    if (!(horizon > 0.0)) throw domain_error("GridSpec: need T > 0");
  }

  double dt() const { return horizon / n; }
};

enum class SimMethod { circulant, cholesky };

inline const char* to_string(SimMethod m) {
  return m == SimMethod::circulant ? "circulant" : "cholesky";
}

/// A sampled path with its generation provenance.
struct FbmPath {
  GridSpec grid;
  std::vector<double> values;  // n+1 entries, values[0] == 0
  uint64_t seed = 0;
  SimMethod method = SimMethod::circulant;
};

/// fGn autocovariance gamma(k) = (dt^{2H}/2)(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
inline double fgn_autocovariance(const HurstModel& model, const GridSpec& grid, int k) {
  if (k < 0 || k > grid.n) throw domain_error("fgn_autocovariance: lag out of range");
  const double a = model.two_h();
  const double scale = 0.5 * std::pow(grid.dt(), a);
  return scale * (std::pow(k + 1.0, a) - 2.0 * std::pow(static_cast<double>(k), a) +
                  std::pow(std::abs(k - 1.0), a));
}

namespace detail {

struct TableKey {
  uint64_t h_bits, dt_bits;
  int n;
  bool operator<(const TableKey& o) const {
    return std::tie(h_bits, dt_bits, n) < std::tie(o.h_bits, o.dt_bits, o.n);
  }
};

inline TableKey table_key(const HurstModel& model, const GridSpec& grid) {
  TableKey k;
  std::memcpy(&k.h_bits, &model.hurst, 8);
  const double dt = grid.dt();
  std::memcpy(&k.dt_bits, &dt, 8);
  k.n = grid.n;
  return k;
}

/// sqrt of the circulant-embedding eigenvalues, length 2n.  fGn embeddings
/// are provably nonnegative-definite; eigenvalues below -1e-10 * max abort
/// (they would indicate a bug), tiny negatives are clipped to zero.
struct CirculantTable {
  std::vector<double> sqrt_lambda;
};

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

inline std::shared_ptr<const CirculantTable> circulant_table(const HurstModel& model,
                                                             const GridSpec& grid) {
  static std::map<TableKey, std::shared_ptr<const CirculantTable>> cache;
  static std::mutex cache_mutex;
  const TableKey key = table_key(model, grid);
  std::lock_guard<std::mutex> lock(cache_mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int m = 2 * grid.n;
  std::vector<double> row(static_cast<size_t>(m));
  for (int k = 0; k <= grid.n; ++k) row[static_cast<size_t>(k)] = fgn_autocovariance(model, grid, k);
  for (int k = 1; k < grid.n; ++k) row[static_cast<size_t>(m - k)] = row[static_cast<size_t>(k)];

  std::vector<double> lambda(static_cast<size_t>(m));
  {
    std::lock_guard<std::mutex> fftw_lock(fftw_mutex());
    fftw_complex* in = fftw_alloc_complex(static_cast<size_t>(m));
    fftw_complex* out = fftw_alloc_complex(static_cast<size_t>(m));
    fftw_plan plan = fftw_plan_dft_1d(m, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    for (int k = 0; k < m; ++k) {
      in[k][0] = row[static_cast<size_t>(k)];
      in[k][1] = 0.0;
    }
    fftw_execute(plan);
    for (int k = 0; k < m; ++k) lambda[static_cast<size_t>(k)] = out[k][0];
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }

  double max_lambda = 0.0;
  for (double l : lambda) max_lambda = std::max(max_lambda, l);
  auto table = std::make_shared<CirculantTable>();
  table->sqrt_lambda.resize(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    double l = lambda[static_cast<size_t>(k)];
    if (l < -1e-10 * max_lambda)
      throw embedding_error("circulant embedding: negative eigenvalue beyond tolerance");
    if (l < 0.0) l = 0.0;
    table->sqrt_lambda[static_cast<size_t>(k)] = std::sqrt(l);
  }
  cache.emplace(key, table);
  return table;
}

/// Lower-triangular Cholesky factor of the fGn covariance (Toeplitz
/// gamma(|i-j|)), row-major n x n.
struct CholeskyTable {
  std::vector<double> lower;
  int n = 0;
};

inline std::shared_ptr<const CholeskyTable> cholesky_table(const HurstModel& model,
                                                           const GridSpec& grid) {
  static std::map<TableKey, std::shared_ptr<const CholeskyTable>> cache;
  static std::mutex cache_mutex;
  const TableKey key = table_key(model, grid);
  std::lock_guard<std::mutex> lock(cache_mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int n = grid.n;
  std::vector<double> gamma(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) gamma[static_cast<size_t>(k)] = fgn_autocovariance(model, grid, k);
  auto table = std::make_shared<CholeskyTable>();
  table->n = n;
  auto& L = table->lower;
  L.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = gamma[static_cast<size_t>(i - j)];
      for (int k = 0; k < j; ++k)
        s -= L[static_cast<size_t>(i) * n + k] * L[static_cast<size_t>(j) * n + k];
      if (i == j) {
        if (!(s > 0.0)) throw numeric_error("cholesky: matrix not positive definite");
        L[static_cast<size_t>(i) * n + i] = std::sqrt(s);
      } else {
        L[static_cast<size_t>(i) * n + j] = s / L[static_cast<size_t>(j) * n + j];
      }
    }
  }
  cache.emplace(key, table);
  return table;
}

}  // namespace detail

/// Default cap for the dense-Cholesky method.
inline constexpr int cholesky_default_cap = 4096;

/// Reusable per-thread sampler: owns the FFT plan and scratch buffers.
/// Construction is cheap after the first call for a given (H, n, dt).
class PathSampler {
 public:
  PathSampler(const HurstModel& model, const GridSpec& grid, SimMethod method,
              int cholesky_cap = cholesky_default_cap)
      : model_(model), grid_(grid), method_(method) {
    if (method == SimMethod::circulant) {
      table_ = detail::circulant_table(model, grid);
      const int m = 2 * grid.n;
      std::lock_guard<std::mutex> lock(detail::fftw_mutex());
      in_ = fftw_alloc_complex(static_cast<size_t>(m));
      out_ = fftw_alloc_complex(static_cast<size_t>(m));
      plan_ = fftw_plan_dft_1d(m, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    } else {
      if (grid.n > cholesky_cap)
        throw domain_error("sample_path: n exceeds the cholesky cap");
      chol_ = detail::cholesky_table(model, grid);
    }
  }

  ~PathSampler() {
    if (plan_ != nullptr) {
      std::lock_guard<std::mutex> lock(detail::fftw_mutex());
      fftw_destroy_plan(plan_);
      fftw_free(in_);
      fftw_free(out_);
    }
  }

  PathSampler(const PathSampler&) = delete;
  PathSampler& operator=(const PathSampler&) = delete;

  const GridSpec& grid() const { return grid_; }
  const HurstModel& model() const { return model_; }

  /// Samples one path; deterministic in (seed, method, n, H, T).
  FbmPath sample(uint64_t seed) {
    FbmPath path{grid_, {}, seed, method_};
    path.values.resize(static_cast<size_t>(grid_.n) + 1);
    path.values[0] = 0.0;
    GaussianStream g(seed);
    if (method_ == SimMethod::circulant)
      fill_circulant(g, path.values);
    else
      fill_cholesky(g, path.values);
    return path;
  }

  /// Writes the fGn increments for one path into `out` (size n).
  void sample_increments(uint64_t seed, std::vector<double>& out) {
    out.resize(static_cast<size_t>(grid_.n));
    GaussianStream g(seed);
    if (method_ == SimMethod::circulant)
      fgn_circulant(g, out);
    else
      fgn_cholesky(g, out);
  }

 private:
  void fgn_circulant(GaussianStream& g, std::vector<double>& fgn) {
    const int n = grid_.n, m = 2 * n;
    const auto& sl = table_->sqrt_lambda;
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
    const double inv_sqrt_2 = 1.0 / std::sqrt(2.0);
    in_[0][0] = sl[0] * g.next();
    in_[0][1] = 0.0;
    in_[n][0] = sl[static_cast<size_t>(n)] * g.next();
    in_[n][1] = 0.0;
    for (int k = 1; k < n; ++k) {
      const double a = g.next(), b = g.next();
      const double s = sl[static_cast<size_t>(k)] * inv_sqrt_2;
      in_[k][0] = s * a;
      in_[k][1] = s * b;
      in_[m - k][0] = s * a;
      in_[m - k][1] = -s * b;
    }
    fftw_execute(plan_);
    for (int k = 0; k < n; ++k) fgn[static_cast<size_t>(k)] = out_[k][0] * inv_sqrt_m;
  }

  void fgn_cholesky(GaussianStream& g, std::vector<double>& fgn) {
    const int n = grid_.n;
    std::vector<double> z(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<size_t>(i)] = g.next();
    const auto& L = chol_->lower;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k <= i; ++k) s += L[static_cast<size_t>(i) * n + k] * z[static_cast<size_t>(k)];
      fgn[static_cast<size_t>(i)] = s;
    }
  }

  void fill_circulant(GaussianStream& g, std::vector<double>& values) {
    std::vector<double> fgn;
    fgn.resize(static_cast<size_t>(grid_.n));
    fgn_circulant(g, fgn);
    accumulate(fgn, values);
  }

  void fill_cholesky(GaussianStream& g, std::vector<double>& values) {
    std::vector<double> fgn(static_cast<size_t>(grid_.n));
    fgn_cholesky(g, fgn);
    accumulate(fgn, values);
  }

  static void accumulate(const std::vector<double>& fgn, std::vector<double>& values) {
    double s = 0.0;
    for (size_t k = 0; k < fgn.size(); ++k) {
      s += fgn[k];
      values[k + 1] = s;
    }
  }

  HurstModel model_;
  GridSpec grid_;
  SimMethod method_;
  std::shared_ptr<const detail::CirculantTable> table_;
  std::shared_ptr<const detail::CholeskyTable> chol_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

/// One-shot convenience wrapper around PathSampler.
inline FbmPath sample_path(const HurstModel& model, const GridSpec& grid, uint64_t seed,
                           SimMethod method) {
  PathSampler sampler(model, grid, method);
  return sampler.sample(seed);
}

}  // namespace dslt
