#include <catch_amalgamated.hpp>

#include <cmath>

#include "glstable/ergodicity_lab.hpp"

using namespace glstable;
using glstable::kPi;

namespace {

NoiseSpec small_spec(int m) {
  NoiseSpec s;
  s.m = m;
  return s;
}

SimConfig small_cfg(int m, double T) {
  SimConfig c;
  c.m = m;
  c.T = T;
  c.dt = 2e-3;
  return c;
}

}  // namespace

TEST_CASE("observables") {
  const auto x = SpectralField::cosine_mode(8, 2, 3.0);
  CHECK(observable_norm_H().fn(x) == Catch::Approx(3.0));
  CHECK(observable_norm_V().fn(x) == Catch::Approx(3.0 * 4.0 * kPi));
  CHECK(observable_mode(2).fn(x) == 3.0);
  CHECK(observable_by_name("normV").name == "normV");
  CHECK_THROWS_AS(observable_by_name("nope"), std::invalid_argument);
}

TEST_CASE("empirical summaries") {
  std::vector<double> v;
  for (int i = 1; i <= 101; ++i) v.push_back(i);
  const auto s = summarize("ramp", v);
  CHECK(s.count == 101);
  CHECK(s.mean == Catch::Approx(51.0));
  CHECK(s.median == Catch::Approx(51.0));
  std::size_t total = 0;
  for (auto c : s.bin_counts) total += c;
  CHECK(total == 101);
  for (std::size_t i = 1; i < s.quantiles.size(); ++i) CHECK(s.quantiles[i] >= s.quantiles[i - 1]);

  auto cfg = small_cfg(8, 0.2);
  cfg.checkpoint_stride = 1;
  const auto tr = solve_trajectory(SpectralField::cosine_mode(8, 1, 1.0), small_spec(8), cfg);
  const auto occ = occupation_values(tr, 0.1, observable_norm_H());
  CHECK(occ.size() == 51);
  CHECK(time_average_summary(tr, 0.1, observable_norm_H()).burn_in == 0.1);
}

TEST_CASE("identical ensembles give a zero KS statistic") {
  const auto spec = small_spec(16);
  const auto cfg = small_cfg(16, 0.1);
  const auto x = SpectralField::cosine_mode(16, 1, 2.0);
  std::size_t aborted = 0;
  const auto a = terminal_values(x, spec, cfg, 50, 9, {observable_norm_H()}, &aborted);
  const auto b = terminal_values(x, spec, cfg, 50, 9, {observable_norm_H()}, &aborted);
  CHECK(a == b);
  CHECK(stats::ks_two_sample(a[0], b[0]).statistic == 0.0);
  CHECK(aborted == 0);
}

TEST_CASE("uniqueness probe and null repetitions") {
  const auto spec = small_spec(16);
  const auto cfg = small_cfg(16, 0.2);
  const auto x1 = SpectralField::cosine_mode(16, 1, 2.0);
  const auto x2 = SpectralField::sine_mode(16, 3, -1.0);
  std::vector<EnsembleRow> rows;
  const auto reps = uniqueness_probe(x1, x2, spec, cfg, 60, 3, 0.0, {observable_norm_H(), observable_mode(1)}, &rows);
  REQUIRE(reps.size() == 2);
  CHECK(rows.size() == 240);
  CHECK(reps[0].n1 == 60);
  CHECK(reps[0].x1_normH == Catch::Approx(2.0));
  CHECK(reps[0].in_window == spec.ergodic_window());
  CHECK_THROWS_AS(uniqueness_probe(x1, x2, spec, cfg, 10, 3, 0.2, {observable_norm_H()}), std::invalid_argument);

  auto outside = spec;
  outside.alpha = 1.2;
  CHECK_FALSE(outside.ergodic_window());
  CHECK(window_label(outside).find("outside") != std::string::npos);

  const auto null = ks_null_repetitions(x1, spec, small_cfg(16, 0.1), 60, 10, 4, observable_norm_H());
  CHECK(null.repetitions == 10);
  CHECK(null.statistics.size() == 10);
  CHECK(null.pass_fraction() >= 0.7);
}

TEST_CASE("continuity: zero perturbation is exact") {
  const auto x = SpectralField::cosine_mode(16, 1, 1.0);
  const auto t = pathwise_continuity_probe(x, {0.0, 1e-3}, {0.01, 0.02}, small_spec(16), small_cfg(16, 0.02), 3, 5);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].exact_zero);
  CHECK(t.rows[0].R_max == 0.0);
  CHECK_FALSE(t.rows[2].exact_zero);
  CHECK(t.rows[2].R_max > 0.0);
  CHECK_THROWS_AS(pathwise_continuity_probe(x, {1e-3}, {0.003}, small_spec(16), small_cfg(16, 0.02), 1, 5),
                  std::invalid_argument);
}

TEST_CASE("continuity: linear drift matches the closed form") {
  // With N(u) = -u the difference along e_1 decays like exp(-(gamma_1 - 1) t).
  auto cfg = small_cfg(16, 0.05);
  cfg.dt = 1e-4;
  cfg.drift = Drift::kLinear;
  const std::vector<SpectralField> e = {SpectralField::cosine_mode(16, 1, 1.0)};
  const auto x = SpectralField::sine_mode(16, 2, 0.5);
  const std::vector<double> ts = {0.01, 0.02, 0.05};
  const auto table = pathwise_continuity_probe(x, {1e-2, 1e-4}, ts, small_spec(16), cfg, 2, 6, &e);
  const double g1 = 4.0 * kPi * kPi;
  for (const auto& r : table.rows) {
    const double exact = std::sqrt(g1) * std::exp(-(g1 - 1.0) * r.t);
    CHECK(r.R_max == Catch::Approx(exact).epsilon(2e-3));
    CHECK(r.R_median == Catch::Approx(r.R_max).epsilon(1e-9));
  }
  CHECK(table.linearity_spread() == Catch::Approx(1.0).epsilon(1e-9));
  const auto env = table.scaled_envelope(ts);
  CHECK(env.size() == 3);
  CHECK(table.rate_spread(ts) == Catch::Approx(*std::max_element(env.begin(), env.end()) /
                                               *std::min_element(env.begin(), env.end())));
}

TEST_CASE("continuity: worst direction over the basis modes") {
  // Linearized at 0 the worst mode gives max_k sqrt(gamma_k) exp(-(gamma_k - 1) t).
  auto cfg = small_cfg(16, 0.05);
  cfg.dt = 1e-4;
  cfg.drift = Drift::kLinear;
  const auto dirs = mode_directions(16);
  CHECK(dirs.size() == 16);
  const std::vector<double> ts = {0.01, 0.02, 0.05};
  const auto table = pathwise_continuity_probe(SpectralField(16), {1e-3}, ts, small_spec(16), cfg, 1, 7, &dirs);
  for (const auto& r : table.rows) {
    double exact = 0.0;
    for (int k = 1; k <= 16; ++k) {
      const double g = 4.0 * kPi * kPi * k * k;
      exact = std::max(exact, std::sqrt(g) * std::exp(-(g - 1.0) * r.t));
    }
    CHECK(r.R_max == Catch::Approx(exact).epsilon(2e-3));
  }
  CHECK(table.rate_spread(ts) < 10.0);
  const std::vector<SpectralField> wrong = {SpectralField::cosine_mode(8, 1, 1.0)};
  CHECK_THROWS_AS(pathwise_continuity_probe(SpectralField(16), {1e-3}, ts, small_spec(16), cfg, 1, 7, &wrong),
                  std::invalid_argument);
}

TEST_CASE("deterministic contraction obeys the return bound") {
  auto spec = small_spec(16);
  spec.c0 = 0.0;
  const auto cfg = small_cfg(16, 1.0);
  const auto rep = small_ball_return_probe(5.0, 0.0, 1e-3, spec, cfg, 2, 1, nullptr, 0.0);
  CHECK(rep.accepted == 2);
  CHECK(rep.bound_violations == 0);
  CHECK(rep.returns == 2);

  const auto tr = solve_trajectory(SpectralField::cosine_mode(16, 1, 5.0), spec, cfg.with_modes(16));
  for (std::size_t n = 0; n < tr.times.size(); ++n)
    CHECK(tr.normH[n] <= std::exp(-kReturnRate * tr.times[n]) * 5.0 * (1.0 + 1e-9));
}

TEST_CASE("return probe") {
  const auto spec = small_spec(16);
  const auto cfg = small_cfg(16, 1.0);
  const auto wide = small_ball_return_probe(5.0, 1e6, 1e6, spec, cfg, 20, 2);
  CHECK(wide.accepted == 20);
  CHECK(wide.returns == 20);
  CHECK(wide.return_frequency == 1.0);
  CHECK(wide.wilson_lo > 0.8);
  CHECK(wide.bound_violations == 0);

  const auto narrow = small_ball_return_probe(5.0, 1e-9, 1.0, spec, cfg, 10, 2);
  CHECK(narrow.accepted == 0);
  CHECK(narrow.inconclusive);
  CHECK_FALSE(narrow.note.empty());

  const auto start = SpectralField::sine_mode(16, 2, 4.0);
  CHECK_THROWS_AS(small_ball_return_probe(5.0, 1.0, 1.0, spec, cfg, 1, 2, &start), std::invalid_argument);
  CHECK_THROWS_AS(small_ball_return_probe(5.0, 1.0, 0.0, spec, cfg, 1, 2), std::invalid_argument);
}
