#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "glstable/ou_convolution.hpp"

using namespace glstable;
using Catch::Approx;

TEST_CASE("transition scale matches quadrature of the kernel") {
  // sigma^alpha = beta^alpha int_0^h e^{-alpha gamma s} ds, Simpson oracle.
  for (double gamma : {4.0 * kPi * kPi, 400.0}) {
    for (double alpha : {1.3, 1.8}) {
      const double h = 0.01, beta = 0.7;
      const int n = 2000;
      double s = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::exp(-alpha * gamma * h * i / n);
      }
      s *= h / (3.0 * n);
      CHECK(ou_noise_scale(gamma, beta, alpha, h) == Approx(beta * std::pow(s, 1.0 / alpha)).epsilon(1e-10));
    }
  }
}

TEST_CASE("mode step edge cases") {
  RngStream rng(1, 0);
  CHECK(ou_mode_step(2.0, 3.0, 0.0, 1.8, 0.5, rng) == Approx(2.0 * std::exp(-1.5)).epsilon(1e-15));
  CHECK_THROWS_AS(ou_mode_step(0.0, 0.0, 1.0, 1.8, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(ou_mode_step(0.0, 1.0, 1.0, 1.8, 0.0, rng), std::invalid_argument);
}

TEST_CASE("stationary marginal of the mode step") {
  const double gamma = 4.0 * kPi * kPi, alpha = 1.8;
  const double sigma = std::pow(alpha * gamma, -1.0 / alpha);
  CHECK(ou_noise_scale(gamma, 1.0, alpha, 1e3) == Approx(sigma).epsilon(1e-14));
  RngStream rng(2, 0);
  std::vector<double> z(1000000);
  double state = 0.0;
  for (auto& v : z) v = state = ou_mode_step(state, gamma, 1.0, alpha, 1.0, rng);
  for (double l : {2.0, 5.0, 10.0, 20.0}) {
    const auto cf = stats::empirical_cf(z, l);
    CHECK(std::abs(cf - std::exp(-std::pow(sigma * l, alpha))) < 0.01);
  }
}

TEST_CASE("exact step agrees with a fine Euler oracle") {
  const auto r = ou_exactness_check(16.0 * kPi * kPi, 1.0, 1.8, 1.0, 1000, 1e-4, 3);
  CHECK(r.ks.p_value > 0.01);
  // A wrong scale (missing the alpha in the exponent) is detected.
  RngStream a(4, 0), b(4, 1);
  const double gamma = 4.0 * kPi * kPi, alpha = 1.6;
  const double wrong = std::pow(-std::expm1(-gamma) / gamma, 1.0 / alpha);
  std::vector<double> good(4000), bad(4000);
  for (auto& v : good) v = ou_mode_step(0.0, gamma, 1.0, alpha, 1.0, a);
  for (auto& v : bad) v = wrong * sample_standard_stable(alpha, b);
  CHECK(stats::ks_two_sample(good, bad).p_value < 0.01);
  CHECK_THROWS_AS(ou_exactness_check(1e5, 1.0, 1.8, 1.0, 10, 1e-4, 1), std::invalid_argument);
}

TEST_CASE("simulate_Z basics") {
  NoiseSpec s;
  s.m = 16;
  const auto grid = uniform_grid(1.0, 64);
  const auto quiet = simulate_Z(s.with_c0(0.0), grid, 1);
  CHECK(path_sup_norm(quiet, 0.5) == 0.0);
  const auto zp = simulate_Z(s, grid, 1);
  CHECK(norm_H(zp.fields.front()) == 0.0);
  CHECK(zp.size() == 65);
  CHECK(simulate_Z(s, grid, 1).fields.back() == zp.fields.back());
  CHECK_FALSE(simulate_Z(s, grid, 2).fields.back() == zp.fields.back());
  CHECK_THROWS_AS(simulate_Z(s, {0.1, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate_Z(s, {0.0, 0.2, 0.2}, 1), std::invalid_argument);

  // Nesting across cutoffs.
  const auto big = simulate_Z(s.with_modes(64), grid, 1);
  CHECK(truncate_modes(big.fields.back(), 16) == zp.fields.back());
}

TEST_CASE("path_sup_norm") {
  NoiseSpec s;
  s.m = 8;
  ZPath single{{0.0}, {SpectralField::cosine_mode(8, 2, 3.0)}, s, 0};
  CHECK(path_sup_norm(single, 0.0) == 3.0);
  const auto fine = simulate_Z(s, uniform_grid(1.0, 256), 9);
  for (std::size_t stride : {2u, 4u, 16u})
    CHECK(path_sup_norm(subsample(fine, stride), 0.5) <= path_sup_norm(fine, 0.5));
}

TEST_CASE("E ||Z_1|| settles as the cutoff doubles") {
  NoiseSpec s;
  double m64 = 0.0, m128 = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    m64 += norm_H(simulate_Z(s.with_modes(64), {0.0, 1.0}, derive_seed(5, i)).fields.back());
    m128 += norm_H(simulate_Z(s.with_modes(128), {0.0, 1.0}, derive_seed(5, i)).fields.back());
  }
  CHECK(std::abs(m128 - m64) <= 0.01 * m64);
}

TEST_CASE("stationarity of E ||Z_t||") {
  NoiseSpec s;
  s.m = 16;
  const auto grid = uniform_grid(10.0, 1000);
  std::vector<double> early, late;
  for (std::uint64_t i = 0; i < 400; ++i) {
    const auto zp = simulate_Z(s, grid, derive_seed(6, i));
    double a = 0.0, b = 0.0;
    for (std::size_t n = 100; n < 200; ++n) a += norm_H(zp.fields[n]);
    for (std::size_t n = 900; n < 1000; ++n) b += norm_H(zp.fields[n]);
    early.push_back(a / 100.0);
    late.push_back(b / 100.0);
  }
  const double se = std::hypot(stats::standard_error(early), stats::standard_error(late));
  CHECK(stats::mean(late) <= stats::mean(early) + 4.0 * se);
}

TEST_CASE("integration by parts consistency") {
  NoiseSpec s;
  s.m = 4;
  CHECK(ibp_consistency_check(s.with_c0(0.0), 1.0, 4096, 1) == 0.0);
  const double r12 = ibp_consistency_check(s, 1.0, 1 << 12, 7, 1 << 13);
  const double r13 = ibp_consistency_check(s, 1.0, 1 << 13, 7, 1 << 13);
  CHECK(r13 / r12 == Approx(0.5).epsilon(0.3));
  CHECK_THROWS_AS(ibp_consistency_check(s, 1.0, 3, 1, 4), std::invalid_argument);
}

TEST_CASE("maximal inequality scan") {
  NoiseSpec s;
  s.m = 16;
  const std::vector<double> T = {0.125, 0.25, 0.5, 1.0};
  const auto quiet = maximal_inequality_scan(s.with_c0(0.0), 0.0, 1.0, T, 10, 1);
  CHECK(quiet.degenerate);
  CHECK(std::isnan(quiet.slope));
  const auto l = maximal_inequality_scan(s, 0.0, 1.0, T, 400, 2, ScanProcess::kNoise, 32);
  CHECK(std::abs(l.slope - 1.0 / 1.8) < 0.1);
  CHECK_THROWS_AS(maximal_inequality_scan(s, 0.6, 1.0, T, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(maximal_inequality_scan(s, 0.0, 1.9, T, 10, 1), std::invalid_argument);
}

TEST_CASE("accessibility probe") {
  NoiseSpec s;
  s.m = 16;
  const auto all = accessibility_probe(s, 0.5, 1e6, 1.0, 50, 1, 32);
  CHECK(all.estimate == 1.0);
  CHECK(all.wilson_lo > 0.9);
  const auto none = accessibility_probe(s, 0.5, 0.0, 1.0, 50, 1, 32);
  CHECK(none.successes == 0);
  CHECK(none.wilson_lo == 0.0);
  CHECK_THROWS_AS(accessibility_probe(s, 0.6, 1.0, 1.0, 10, 1), std::invalid_argument);
  const auto sup = unit_amplitude_sup_sample(s.with_c0(3.0), 0.5, 1.0, 32, 20, 4);
  const auto sup3 = unit_amplitude_sup_sample(s, 0.5, 1.0, 32, 20, 4);
  CHECK(sup == sup3);
}
