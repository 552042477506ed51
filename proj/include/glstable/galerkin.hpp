#pragma once

// Mode-truncation hierarchy pi_m, Galerkin convergence against a
// high-resolution reference on common noise, and the moment-growth
// experiment for the bound
//   E sup_{t<=T} (||X_t||^2 + 1)^{1/2} + E int_0^T ||X_s||_V^2 / (||X_s||^2 + 1)^{1/2} ds
//     <= (||x||^2 + 1)^{1/2} + C T + C T^{1/2}.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glstable/gl_dynamics.hpp"
#include "glstable/parallel.hpp"
#include "glstable/spectral_field.hpp"
#include "glstable/stable_noise.hpp"
#include "glstable/stats.hpp"

namespace glstable {

/// pi_m x: modes above m zeroed, cutoff unchanged.
inline SpectralField project(const SpectralField& x, int m) {
  if (m < 1) throw std::invalid_argument("project: m must be >= 1");
  if (m > x.modes()) throw std::invalid_argument("project: m exceeds the field's mode cutoff");
  SpectralField out(x.modes());
  for (int k = 1; k <= m; ++k) {
    out.cos_at(k) = x.cos_at(k);
    out.sin_at(k) = x.sin_at(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence.

struct ConvergenceRow {
  int m = 0;
  double errH = 0.0;
  double errV = 0.0;
  std::uint64_t seed = 0;
};

struct ConvergenceReport {
  std::vector<int> m_list;
  int m_ref = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<ConvergenceRow> rows;  // seed-major, m_list order within a seed
  std::vector<std::string> voided;   // one diagnostic per diverged seed

  bool valid() const { return voided.empty(); }

  std::vector<double> errors_at(int m, bool v_norm = false) const {
    std::vector<double> e;
    for (const auto& r : rows)
      if (r.m == m) e.push_back(v_norm ? r.errV : r.errH);
    return e;
  }

  /// Fraction of seeds whose H errors strictly decrease along m_list.
  double monotone_fraction() const {
    if (seeds.empty()) return 0.0;
    std::size_t good = 0;
    const std::size_t k = m_list.size();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      bool ok = true;
      for (std::size_t j = 1; j < k; ++j)
        if (!(rows[s * k + j].errH < rows[s * k + j - 1].errH)) ok = false;
      good += ok ? 1 : 0;
    }
    return static_cast<double>(good) / static_cast<double>(seeds.size());
  }
};

/// Final-time errors of the X^m runs against the m_ref run for one seed.
/// x0 is given at cutoff m_ref; each run starts from pi_m x0 and is driven
/// by the first m modes of the same noise.
inline std::vector<ConvergenceRow> galerkin_errors(const SpectralField& x0, const NoiseSpec& spec,
                                                   const SimConfig& cfg, const std::vector<int>& m_list, int m_ref,
                                                   std::uint64_t seed) {
  SimConfig c = cfg.with_modes(m_ref);
  c.seed = seed;
  c.checkpoint_stride = 0;
  const auto ref = solve_trajectory(x0, spec.with_modes(m_ref), c);
  std::vector<ConvergenceRow> rows;
  for (int m : m_list) {
    SimConfig cm = cfg.with_modes(m);
    cm.seed = seed;
    cm.checkpoint_stride = 0;
    const auto tr = solve_trajectory(truncate_modes(x0, m), spec.with_modes(m), cm);
    const SpectralField diff = extend_modes(tr.final_X, m_ref) - ref.final_X;
    rows.push_back({m, norm_H(diff), norm_V(diff), seed});
  }
  return rows;
}

inline ConvergenceReport galerkin_convergence_experiment(const SpectralField& x0, const NoiseSpec& spec,
                                                         const SimConfig& cfg, std::vector<int> m_list, int m_ref,
                                                         std::size_t n_seeds, std::uint64_t seed) {
  if (m_list.empty()) throw std::invalid_argument("galerkin: m_list is empty");
  std::sort(m_list.begin(), m_list.end());
  if (m_list.front() < 1) throw std::invalid_argument("galerkin: every m must be >= 1");
  if (2 * m_list.back() > m_ref) throw std::invalid_argument("galerkin: need max(m_list) <= m_ref / 2");
  if (x0.modes() != m_ref) throw std::invalid_argument("galerkin: x0 must be given at the reference cutoff");
  ConvergenceReport rep;
  rep.m_list = m_list;
  rep.m_ref = m_ref;
  for (std::size_t s = 0; s < n_seeds; ++s) rep.seeds.push_back(derive_seed(seed, s));
  std::vector<std::vector<ConvergenceRow>> per(n_seeds);
  std::vector<std::string> err(n_seeds);
  parallel_for(n_seeds, [&](std::size_t s) {
    try {
      per[s] = galerkin_errors(x0, spec, cfg, m_list, m_ref, rep.seeds[s]);
    } catch (const TrajectoryAborted& e) {
      err[s] = "seed " + std::to_string(rep.seeds[s]) + ": " + e.what();
    }
  });
  for (std::size_t s = 0; s < n_seeds; ++s) {
    if (!err[s].empty()) {
      rep.voided.push_back(err[s]);
      continue;
    }
    for (const auto& r : per[s])
      if (!std::isfinite(r.errH) || !std::isfinite(r.errV))
        rep.voided.push_back("seed " + std::to_string(r.seed) + ": non-finite error");
    rep.rows.insert(rep.rows.end(), per[s].begin(), per[s].end());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Moment growth.

struct MomentRow {
  double T = 0.0;
  double sup_mean = 0.0;       // E sup_{t<=T} (||X_t||^2 + 1)^{1/2}
  double sup_median = 0.0;
  double integral_mean = 0.0;  // E int_0^T ||X||_V^2 / (||X||^2 + 1)^{1/2}
  double integral_median = 0.0;
  double lhs_mean = 0.0;       // sum of the two
  double lhs_median = 0.0;
  double v_integral_mean = 0.0;  // E int_0^T ||X||_V
  double v_integral_median = 0.0;
};

struct MomentReport {
  std::vector<MomentRow> rows;
  stats::AffineRootFit lhs_fit;  // lhs_mean ~ a + b T + c T^{1/2}, b, c >= 0
  stats::AffineRootFit sup_fit;  // sup_mean alone
  double v_integral_ratio = 0.0;  // E int ||X||_V over the last two horizons
  std::size_t n_mc = 0;
  std::size_t aborted = 0;
};

/// Accumulators of one path evaluated at each horizon in T_list (sorted).
inline std::vector<std::array<double, 3>> moment_path(const SpectralField& x0, const NoiseSpec& spec,
                                                      const SimConfig& cfg, const std::vector<double>& T_list) {
  SimConfig c = cfg;
  c.T = T_list.back();
  c.checkpoint_stride = 0;
  const auto tr = solve_trajectory(x0, spec, c);
  std::vector<std::array<double, 3>> out;
  double sup = 0.0, integral = 0.0, vint = 0.0;
  std::size_t j = 0;
  for (std::size_t n = 0; n < tr.times.size() && j < T_list.size(); ++n) {
    const double h2 = tr.normH[n] * tr.normH[n];
    sup = std::max(sup, std::sqrt(h2 + 1.0));
    if (n > 0) {
      // Trapezoid rule on the recorded grid.
      const double h = tr.times[n] - tr.times[n - 1];
      const double p2 = tr.normH[n - 1] * tr.normH[n - 1];
      const double f0 = tr.normV[n - 1] * tr.normV[n - 1] / std::sqrt(p2 + 1.0);
      const double f1 = tr.normV[n] * tr.normV[n] / std::sqrt(h2 + 1.0);
      integral += 0.5 * h * (f0 + f1);
      vint += 0.5 * h * (tr.normV[n - 1] + tr.normV[n]);
    }
    if (std::abs(tr.times[n] - T_list[j]) <= 1e-9 * std::max(1.0, T_list[j])) {
      out.push_back({sup, integral, vint});
      ++j;
    }
  }
  if (out.size() != T_list.size()) throw std::invalid_argument("moment_growth: horizons must be multiples of dt");
  return out;
}

inline MomentReport moment_growth_experiment(const NoiseSpec& spec, const SimConfig& cfg,
                                             std::vector<double> T_list, std::size_t n_mc, std::uint64_t seed,
                                             std::optional<SpectralField> x0 = std::nullopt) {
  if (T_list.size() < 3) throw std::invalid_argument("moment_growth: need >= 3 horizons");
  std::sort(T_list.begin(), T_list.end());
  if (!(T_list.front() > 0.0)) throw std::invalid_argument("moment_growth: horizons must be > 0");
  const SpectralField start = x0 ? *x0 : SpectralField(cfg.m);
  std::vector<std::vector<std::array<double, 3>>> per(n_mc);
  std::vector<char> aborted(n_mc, 0);
  parallel_for(n_mc, [&](std::size_t i) {
    SimConfig c = cfg;
    c.seed = derive_seed(seed, i);
    try {
      per[i] = moment_path(start, spec, c, T_list);
    } catch (const TrajectoryAborted&) {
      aborted[i] = 1;
    }
  });
  MomentReport rep;
  rep.n_mc = n_mc;
  for (char a : aborted) rep.aborted += static_cast<std::size_t>(a);
  std::vector<double> ts, lhs, sups;
  for (std::size_t j = 0; j < T_list.size(); ++j) {
    std::vector<double> s, in, l, v;
    for (std::size_t i = 0; i < n_mc; ++i) {
      if (aborted[i]) continue;
      s.push_back(per[i][j][0]);
      in.push_back(per[i][j][1]);
      l.push_back(per[i][j][0] + per[i][j][1]);
      v.push_back(per[i][j][2]);
    }
    if (s.empty()) throw std::runtime_error("moment_growth: every trajectory aborted");
    MomentRow r;
    r.T = T_list[j];
    r.sup_mean = stats::mean(s);
    r.sup_median = stats::median(s);
    r.integral_mean = stats::mean(in);
    r.integral_median = stats::median(in);
    r.lhs_mean = stats::mean(l);
    r.lhs_median = stats::median(l);
    r.v_integral_mean = stats::mean(v);
    r.v_integral_median = stats::median(v);
    rep.rows.push_back(r);
    ts.push_back(r.T);
    lhs.push_back(r.lhs_mean);
    sups.push_back(r.sup_mean);
  }
  rep.lhs_fit = stats::fit_affine_root(ts, lhs);
  rep.sup_fit = stats::fit_affine_root(ts, sups);
  const auto& a = rep.rows[rep.rows.size() - 2];
  const auto& b = rep.rows.back();
  rep.v_integral_ratio = a.v_integral_mean > 0.0 ? b.v_integral_mean / a.v_integral_mean : 0.0;
  return rep;
}

}  // namespace glstable
