#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "glstable/stable_noise.hpp"
#include "glstable/stats.hpp"

using namespace glstable;

namespace {

std::vector<double> draws(double alpha, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, stream_id(StreamTag::kScalar, 0));
  std::vector<double> z(n);
  for (auto& v : z) v = sample_standard_stable(alpha, rng);
  return z;
}

}  // namespace

TEST_CASE("alpha = 2 is Gaussian with variance 2") {
  const auto z = draws(2.0, 1000000, 11);
  double s = 0.0;
  for (double v : z) s += v * v;
  CHECK(std::abs(s / static_cast<double>(z.size()) - 2.0) < 0.06);
}

TEST_CASE("characteristic function and symmetry") {
  for (double alpha : {1.6, 1.8}) {
    const auto z = draws(alpha, 1000000, 12);
    for (double l : {0.5, 1.0, 2.0}) {
      const auto cf = stats::empirical_cf(z, l);
      CHECK(std::abs(cf - std::exp(-std::pow(l, alpha))) < 0.01);
    }
    CHECK(std::abs(stats::median(z)) < 0.01);
  }
}

TEST_CASE("alpha = 1 matches the Cauchy quartiles") {
  const auto z = draws(1.0, 200000, 13);
  CHECK(stats::quantile(z, 0.75) == Catch::Approx(1.0).epsilon(0.02));
  CHECK(stats::quantile(z, 0.25) == Catch::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("tail index of alpha = 1.8") {
  auto z = draws(1.8, 1000000, 14);
  for (auto& v : z) v = std::abs(v);
  std::sort(z.begin(), z.end());
  // Every order statistic with survival level in [1e-5, 1e-3].
  std::vector<double> lx, ly;
  const double n = static_cast<double>(z.size());
  for (std::size_t j = 10; j <= 1000; ++j) {
    lx.push_back(std::log(z[z.size() - j]));
    ly.push_back(std::log(static_cast<double>(j) / n));
  }
  const auto fit = stats::fit_line(lx, ly);
  CHECK(fit.slope >= -1.95);
  CHECK(fit.slope <= -1.65);
}

TEST_CASE("moments of order p >= alpha do not settle") {
  const auto z = draws(1.8, 1 << 20, 15);
  std::vector<double> running;
  double s = 0.0;
  std::size_t next = 1 << 10;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s += std::pow(std::abs(z[i]), 2.5);
    if (i + 1 == next) {
      running.push_back(s / static_cast<double>(next));
      next *= 2;
    }
  }
  CHECK(running.back() > 5.0 * running.front());
  // E|z|^p = infinity: the running estimate grows like n^{p/alpha - 1}.
  std::vector<double> ln, lm;
  for (std::size_t i = 0; i < running.size(); ++i) {
    ln.push_back(std::log(static_cast<double>(std::size_t{1} << (10 + i))));
    lm.push_back(std::log(running[i]));
  }
  CHECK(stats::fit_line(ln, lm).slope > 0.2);
}

TEST_CASE("stable_increment") {
  RngStream rng(1, 0);
  CHECK(stable_increment(1.8, 0.0, 0.5, rng) == 0.0);
  CHECK_THROWS_AS(stable_increment(1.8, -1.0, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(stable_increment(1.8, 1.0, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(stable_increment(2.5, 1.0, 1.0, rng), std::invalid_argument);
  RngStream a(3, 1), b(3, 1);
  CHECK(stable_increment(1.8, 2.0, 0.25, a) == 2.0 * std::pow(0.25, 1.0 / 1.8) * sample_standard_stable(1.8, b));
}

TEST_CASE("noise spec validation and windows") {
  NoiseSpec s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.ergodic_window());
  CHECK(s.beta_lower() == Catch::Approx(0.5 + 0.5 / 1.8));
  CHECK(s.beta_upper_ergodic() == Catch::Approx(1.5 - 1.0 / 1.8));
  CHECK(s.beta_k(1) == Catch::Approx(std::pow(4.0 * kPi * kPi, -0.85)).epsilon(1e-14));
  NoiseSpec bad = s;
  bad.beta = 0.7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.alpha = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.c0 = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  NoiseSpec outside = s;
  outside.beta = 1.0;
  CHECK_NOTHROW(outside.validate());
  CHECK_FALSE(outside.ergodic_window());
}

TEST_CASE("cylindrical increments") {
  NoiseSpec s;
  s.m = 8;
  const NoiseSource src(s.alpha, 5);
  CHECK(norm_H(cylindrical_increment(s.with_c0(0.0), 0.1, src, 0)) == 0.0);
  CHECK(cylindrical_increment(s, 0.1, src, 3) == cylindrical_increment(s, 0.1, NoiseSource(s.alpha, 5), 3));
  CHECK_FALSE(cylindrical_increment(s, 0.1, src, 3) == cylindrical_increment(s, 0.1, src, 4));

  // Nesting: the m = 8 increment is the head of the m = 256 increment.
  const auto small = cylindrical_increment(s, 1e-3, src, 17);
  const auto big = cylindrical_increment(s.with_modes(256), 1e-3, src, 17);
  for (int k = 1; k <= 8; ++k) {
    CHECK(small.cos_at(k) == big.cos_at(k));
    CHECK(small.sin_at(k) == big.sin_at(k));
  }

  std::ostringstream os;
  write_increment_rows(os, 2, small);
  std::istringstream is(os.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 16);
  CHECK(os.str().rfind("2,0,", 0) == 0);
}
