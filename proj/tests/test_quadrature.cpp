/// Tests for the deterministic variance integrals and limit constants:
/// sigma^2 (two closed-form routes), the V1/V2/V3 decomposition of
/// E[alpha_eps^2], exact chaos variances, sigma_q^2 and bar-sigma_q^2, the
/// Gaussian second-moment identity behind all of them, and honesty of the
/// convergence metadata.  Reference numbers are frozen engine values that
/// were cross-validated against an independent extended-precision prototype.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dslt/math_kernels.hpp"
#include "dslt/quadrature.hpp"

using Catch::Approx;

TEST_CASE("sigma^2 closed form", "[quadrature]") {
  SECTION("frozen anchors") {
    CHECK(dslt::sigma_squared(dslt::HurstModel(0.7, 1.0)) ==
          Approx(14.770145785201189).epsilon(1e-12));
    CHECK(dslt::sigma_squared(dslt::HurstModel(0.75, 1.0)) ==
          Approx(2.2251866045624239).epsilon(1e-12));
    CHECK(dslt::sigma_squared(dslt::HurstModel(0.8, 1.0)) ==
          Approx(0.85485922469784244).epsilon(1e-12));
    CHECK(dslt::sigma_squared(dslt::HurstModel(0.9, 1.0)) ==
          Approx(0.29238526586964998).epsilon(1e-12));
  }

  SECTION("the two closed-form routes agree") {
    for (double h : {0.70, 0.75, 0.80, 0.90}) {
      const dslt::HurstModel model(h, 1.0);
      CHECK(dslt::sigma_squared(model) ==
            Approx(dslt::sigma_squared_via_lemma(model)).epsilon(1e-12));
    }
  }

  SECTION("horizon scaling T^{2H}") {
    for (double h : {0.7, 0.8})
      for (double t : {0.5, 2.0, 3.7})
        CHECK(dslt::sigma_squared(dslt::HurstModel(h, t)) ==
              Approx(std::pow(t, 2.0 * h) * dslt::sigma_squared(dslt::HurstModel(h, 1.0)))
                  .epsilon(1e-13));
  }

  SECTION("finite and positive across the window") {
    for (double h = 0.70; h < 0.96; h += 0.05) {
      const double v = dslt::sigma_squared(dslt::HurstModel(h, 1.0));
      CHECK(std::isfinite(v));
      CHECK(v > 0.0);
    }
  }

  SECTION("window guard") {
    CHECK_THROWS_AS(dslt::sigma_squared(dslt::HurstModel(0.6, 1.0)), dslt::domain_error);
    CHECK_THROWS_AS(dslt::sigma_squared(dslt::HurstModel(2.0 / 3.0, 1.0)),
                    dslt::domain_error);
    CHECK_THROWS_AS(dslt::sigma_squared_via_lemma(dslt::HurstModel(0.5, 1.0)),
                    dslt::domain_error);
  }
}

TEST_CASE("Gaussian second-moment identity", "[quadrature]") {
  // E[X Y p_theta(X) p_theta(Y)] = (2 pi)^{-1} theta^2 |theta I + Sigma|^{-3/2}
  // Sigma_12 for centered Gaussian (X, Y); verified against nested adaptive
  // quadrature in Cholesky coordinates on 100 random PSD matrices.  This
  // identity is the backbone of every variance integral in this module.
  // (A fixed Gauss-Hermite rule cannot be used here: at theta = 0.1 the heat
  // kernel is much narrower than the standard-normal weight, so the peak
  // falls between nodes.  The adaptive rule gets the peak scale sqrt(theta)
  // as interior hints instead.)
  std::mt19937_64 rng(4711);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double inv_sqrt2pi = 0.3989422804014327;
  for (int trial = 0; trial < 100; ++trial) {
    double a11 = u(rng), a12 = u(rng), a21 = u(rng), a22 = u(rng);
    const double s11 = a11 * a11 + a12 * a12;
    const double s12 = a11 * a21 + a12 * a22;
    const double s22 = a21 * a21 + a22 * a22;
    if (s11 < 1e-3 || s22 < 1e-3) continue;  // keep the factor well-conditioned
    // Cholesky factor of Sigma: (X, Y) = (l11 xi, l21 xi + l22 eta) turns the
    // joint density into the product of two standard normals.
    const double l11 = std::sqrt(s11);
    const double l21 = s12 / l11;
    const double l22 = std::sqrt(std::max(0.0, s22 - l21 * l21));
    for (double theta : {0.1, 1.0}) {
      const double wout = std::sqrt(theta) / l11;
      const double win = l22 > 0.0 ? std::sqrt(theta) / l22 : 0.0;
      auto outer = [&](double xi) {
        const double x = l11 * xi;
        const double fx =
            x * dslt::heat_kernel(theta, x) * inv_sqrt2pi * std::exp(-0.5 * xi * xi);
        if (fx == 0.0) return 0.0;
        auto inner = [&](double eta) {
          const double y = l21 * xi + l22 * eta;
          return y * dslt::heat_kernel(theta, y) * inv_sqrt2pi *
                 std::exp(-0.5 * eta * eta);
        };
        std::vector<double> hints;
        if (win > 0.0) {
          const double c = -l21 * xi / l22;  // eta where y crosses zero
          for (double k : {-3.0, -1.0, 0.0, 1.0, 3.0}) hints.push_back(c + k * win);
        }
        return fx * dslt::gk15_adaptive(inner, -9.0, 9.0, {1e-10, 1e-16, 600}, hints).value;
      };
      std::vector<double> ohints;
      for (double k : {-3.0, -1.0, 0.0, 1.0, 3.0}) ohints.push_back(k * wout);
      const auto est = dslt::gk15_adaptive(outer, -9.0, 9.0, {1e-9, 1e-15, 600}, ohints);
      REQUIRE(est.converged);
      const double det = (theta + s11) * (theta + s22) - s12 * s12;
      const double closed =
          theta * theta / (2.0 * dslt::pi) * std::pow(det, -1.5) * s12;
      const double scale = std::max(std::abs(closed), 1e-6);
      CHECK(std::abs(est.value - closed) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("alpha variance decomposition at H=0.7", "[quadrature]") {
  const dslt::HurstModel model(0.7, 1.0);

  struct Row {
    double eps, v1, v2, v3;
  };
  // Frozen engine values (tol 1e-7, all converged).
  const Row table[] = {
      {1e-3, 0.078749, 0.076514, 0.020222},
      {1e-2, 0.776109, 0.963530, 0.347261},
      {1e-1, 2.536952, 3.691034, 1.814489},
  };

  for (const Row& row : table) {
    const auto av = dslt::exact_alpha_variance(model, row.eps, 1e-7);
    INFO("eps = " << row.eps);
    REQUIRE(av.total.converged);
    CHECK(av.v1.value > 0.0);
    CHECK(av.v2.value > 0.0);
    CHECK(av.v3.value > 0.0);
    CHECK(av.v1.value == Approx(row.v1).epsilon(2e-3));
    CHECK(av.v2.value == Approx(row.v2).epsilon(2e-3));
    CHECK(av.v3.value == Approx(row.v3).epsilon(2e-3));
    CHECK(av.total.value == Approx(av.v1.value + av.v2.value + av.v3.value).epsilon(1e-14));
  }

  CHECK_THROWS_AS(dslt::exact_alpha_variance(model, 0.0), dslt::domain_error);
  CHECK_THROWS_AS(dslt::exact_alpha_variance(dslt::HurstModel(0.4, 1.0), 1e-2),
                  dslt::domain_error);
}

TEST_CASE("region decomposition equals a direct 4-D quadrature", "[quadrature]") {
  // E[alpha_eps^2] integrated directly over {0<=s1<t1<=T} x {0<=s2<t2<=T}
  // without the paper's change of variables, restricted to s1 <= s2 and
  // doubled; coarse 1e-3 agreement with V1+V2+V3.
  const dslt::HurstModel model(0.7, 1.0);
  const double eps = 1e-2;
  const dslt::QuadOptions inner{3e-5, 1e-9, 60};

  auto integrand = [&](double s1, double s2, double t1, double t2) {
    // Build the pair with the role order the type expects (s1 <= s2).
    const dslt::IncrementPair pair(s1, t1, s2, t2);
    const auto s = dslt::sigma_matrix(model, pair);
    return std::pow(s.det_shifted(eps), -1.5) * s.s12;
  };
  auto t2_int = [&](double s1, double s2, double t1) {
    const std::vector<double> kink{t1};
    return dslt::gk15_adaptive([&](double t2) { return integrand(s1, s2, t1, t2); }, s2,
                               1.0, inner, kink)
        .value;
  };
  auto t1_int = [&](double s1, double s2) {
    const std::vector<double> kink{s2};
    return dslt::gk15_adaptive([&](double t1) { return t2_int(s1, s2, t1); }, s1, 1.0,
                               inner, kink)
        .value;
  };
  auto s2_int = [&](double s1) {
    return dslt::gk15_adaptive([&](double s2) { return t1_int(s1, s2); }, s1, 1.0, inner)
        .value;
  };
  const auto outer = dslt::gk15_adaptive(s2_int, 0.0, 1.0, {1e-4, 0.0, 60});
  const double direct = 2.0 / (2.0 * dslt::pi) * outer.value;

  const auto av = dslt::exact_alpha_variance(model, eps, 1e-7);
  CHECK(direct == Approx(av.total.value).epsilon(1e-3));
}

TEST_CASE("first chaos variance", "[quadrature]") {
  const dslt::HurstModel model(0.7, 1.0);
  // Frozen engine values.
  const double pinned[][2] = {{1e-3, 0.115943}, {1e-2, 1.002856}, {1e-1, 3.661285}};
  for (const auto& row : pinned) {
    const auto r = dslt::exact_first_chaos_variance(model, row[0]);
    INFO("eps = " << row[0]);
    REQUIRE(r.converged);
    CHECK(r.value > 0.0);
    CHECK(r.value == Approx(row[1]).epsilon(2e-3));
  }

  SECTION("q=1 route of the general chaos variance is identical") {
    for (double eps : {1e-3, 1e-2}) {
      const auto a = dslt::exact_first_chaos_variance(model, eps);
      const auto b = dslt::exact_chaos_variance(dslt::ChaosKernelSpec(1, eps, model));
      CHECK(a.value == Approx(b.value).epsilon(1e-10));
    }
  }

  SECTION("guards") {
    CHECK_THROWS_AS(dslt::exact_first_chaos_variance(model, 0.0), dslt::domain_error);
    CHECK_THROWS_AS(dslt::exact_first_chaos_variance(dslt::HurstModel(0.6, 1.0), 1e-2),
                    dslt::domain_error);
  }
}

TEST_CASE("higher chaos variances", "[quadrature]") {
  const dslt::HurstModel h7(0.7, 1.0), h8(0.8, 1.0);

  SECTION("frozen third-chaos values at H=0.7") {
    const double pinned[][2] = {{1e-3, 0.031070}, {1e-2, 0.317854}, {1e-1, 0.913657}};
    double prev = 0.0;
    for (const auto& row : pinned) {
      const auto r = dslt::exact_chaos_variance(dslt::ChaosKernelSpec(2, row[0], h7));
      INFO("eps = " << row[0]);
      REQUIRE(r.converged);
      CHECK(r.value == Approx(row[1]).epsilon(2e-3));
    }
    // Monotone growth as eps decreases (scan in decreasing eps).
    prev = dslt::exact_chaos_variance(dslt::ChaosKernelSpec(2, 1e-1, h7)).value;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const double cur = dslt::exact_chaos_variance(dslt::ChaosKernelSpec(2, eps, h7)).value;
      CHECK(cur > prev);
      prev = cur;
    }
  }

  SECTION("frozen third-chaos values at H=0.8 and the CLT-scaled trend") {
    const double pinned[][2] = {
        {1e-1, 0.04139553}, {1e-2, 0.67118822}, {1e-3, 3.13704412}};
    double prev_scaled = 0.0;
    const double limit = 23.583346;
    for (const auto& row : pinned) {
      const auto r = dslt::exact_chaos_variance(dslt::ChaosKernelSpec(2, row[0], h8));
      INFO("eps = " << row[0]);
      REQUIRE(r.converged);
      CHECK(r.value == Approx(row[1]).epsilon(2e-3));
      const double scaled = std::pow(row[0], 2.0 - 1.5 / 0.8) * r.value;
      CHECK(scaled > prev_scaled);  // climbing toward sigma_q^2 ...
      CHECK(scaled < limit);        // ... from below (far away at reachable eps)
      prev_scaled = scaled;
    }
  }
}

TEST_CASE("chaos variance limit in the L2 regime", "[quadrature]") {
  const dslt::ChaosKernelSpec spec(2, 1e-4, dslt::HurstModel(0.7, 1.0));

  SECTION("frozen value and convergence flag") {
    const auto r = dslt::sigma_q_bar_squared(spec);
    REQUIRE(r.converged);
    CHECK(r.value == Approx(4.0365036).margin(2e-4));
  }

  SECTION("window guards") {
    CHECK_THROWS_AS(
        dslt::sigma_q_bar_squared(dslt::ChaosKernelSpec(1, 1e-2, dslt::HurstModel(0.7, 1.0))),
        dslt::domain_error);
    CHECK_THROWS_AS(
        dslt::sigma_q_bar_squared(dslt::ChaosKernelSpec(2, 1e-2, dslt::HurstModel(0.8, 1.0))),
        dslt::domain_error);
    CHECK_THROWS_AS(
        dslt::sigma_q_bar_squared(dslt::ChaosKernelSpec(2, 1e-2, dslt::HurstModel(0.75, 1.0))),
        dslt::critical_hurst_error);
  }
}

TEST_CASE("chaos CLT limit constant", "[quadrature]") {
  SECTION("frozen values across the window") {
    struct Pin {
      int q;
      double h, value;
    };
    const Pin pins[] = {{2, 0.78, 27.556808},
                        {2, 0.80, 23.583346},
                        {2, 0.82, 37.511034},
                        {3, 0.85, 3.2334221}};
    for (const Pin& pin : pins) {
      const auto r =
          dslt::sigma_q_squared(dslt::ChaosKernelSpec(pin.q, 1e-2, dslt::HurstModel(pin.h, 1.0)));
      INFO("q = " << pin.q << ", H = " << pin.h);
      REQUIRE(r.converged);
      CHECK(r.value == Approx(pin.value).epsilon(1e-4));
    }
  }

  SECTION("window guards") {
    CHECK_THROWS_AS(
        dslt::sigma_q_squared(dslt::ChaosKernelSpec(2, 1e-2, dslt::HurstModel(0.85, 1.0))),
        dslt::domain_error);  // 0.85 > 5/6 for q=2
    CHECK_THROWS_AS(
        dslt::sigma_q_squared(dslt::ChaosKernelSpec(2, 1e-2, dslt::HurstModel(0.7, 1.0))),
        dslt::domain_error);  // below 3/4
    CHECK_THROWS_AS(
        dslt::sigma_q_squared(dslt::ChaosKernelSpec(2, 1e-2, dslt::HurstModel(5.0 / 6.0, 1.0))),
        dslt::critical_hurst_error);
    CHECK_THROWS_AS(
        dslt::sigma_q_squared(dslt::ChaosKernelSpec(1, 1e-2, dslt::HurstModel(0.8, 1.0))),
        dslt::domain_error);
  }
}

TEST_CASE("chaos kernel weight is nonnegative across the domain", "[quadrature]") {
  // G >= 0 scan (1e6 points through the compactifying map v/(1-v)).
  const dslt::ChaosKernelSpec spec(2, 1.0, dslt::HurstModel(0.8, 1.0));
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  double worst = 1.0;
  for (int k = 0; k < 1000000; ++k) {
    const double x = u(rng) / (1.0 - u(rng));
    const double u1 = u(rng) / (1.0 - u(rng));
    const double u2 = u(rng) / (1.0 - u(rng));
    worst = std::min(worst, dslt::g_function(spec, x, u1, u2, 1.0));
  }
  CHECK(worst >= 0.0);
}

TEST_CASE("convergence metadata is honest", "[quadrature]") {
  const dslt::HurstModel model(0.7, 1.0);

  SECTION("converged results reproduce within their error estimate") {
    const auto full = dslt::exact_first_chaos_variance(model, 1e-2, 3e-6);
    const auto half = dslt::exact_first_chaos_variance(model, 1e-2, 1.5e-6);
    REQUIRE(full.converged);
    REQUIRE(half.converged);
    CHECK(std::abs(full.value - half.value) <= 2.0 * std::max(full.abs_err_est, 1e-12));

    const dslt::ChaosKernelSpec spec(2, 1e-2, model);
    const auto bfull = dslt::sigma_q_bar_squared(spec, 3e-6);
    const auto bhalf = dslt::sigma_q_bar_squared(spec, 1.5e-6);
    REQUIRE(bfull.converged);
    REQUIRE(bhalf.converged);
    CHECK(std::abs(bfull.value - bhalf.value) <= 2.0 * std::max(bfull.abs_err_est, 1e-12));
  }

  SECTION("error estimates and evaluation counts are populated") {
    const auto r = dslt::exact_first_chaos_variance(model, 1e-2);
    CHECK(r.abs_err_est >= 0.0);
    CHECK(r.evaluations > 0);
  }
}
