#pragma once

// Empirical probes of the invariant-measure theory: occupation statistics
// along a trajectory, two-initial-condition KS comparisons, pathwise
// continuity in the initial datum and the small-ball return experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "glstable/calibration.hpp"
#include "glstable/gl_dynamics.hpp"
#include "glstable/inequalities.hpp"
#include "glstable/ou_convolution.hpp"
#include "glstable/parallel.hpp"
#include "glstable/stats.hpp"

namespace glstable {

struct Observable {
  std::string name;
  std::function<double(const SpectralField&)> fn;
};

inline Observable observable_norm_H() { return {"normH", [](const SpectralField& x) { return norm_H(x); }}; }
inline Observable observable_norm_V() { return {"normV", [](const SpectralField& x) { return norm_V(x); }}; }

inline Observable observable_mode(int k) {
  return {"cos" + std::to_string(k), [k](const SpectralField& x) { return x.cos_at(k); }};
}

/// <x, -N(x)>_H.
inline Observable observable_dissipation() {
  return {"dissipation", [](const SpectralField& x) {
            return -inner_H(x, nonlinearity(x, dealiased_grid_size(x.modes())));
          }};
}

inline Observable observable_by_name(const std::string& name) {
  if (name == "normH") return observable_norm_H();
  if (name == "normV") return observable_norm_V();
  if (name == "dissipation") return observable_dissipation();
  if (name.rfind("cos", 0) == 0 && name.size() > 3) return observable_mode(std::stoi(name.substr(3)));
  throw std::invalid_argument("unknown observable '" + name + "' (normH, normV, dissipation, cosK)");
}

// ---------------------------------------------------------------------------
// Occupation statistics.

struct EmpiricalSummary {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> quantile_levels;
  std::vector<double> quantiles;
  std::vector<double> bin_edges;
  std::vector<std::size_t> bin_counts;
  double burn_in = 0.0;
};

inline EmpiricalSummary summarize(std::string name, const std::vector<double>& v, double burn_in = 0.0,
                                  std::size_t n_bins = 20) {
  if (v.empty()) throw std::invalid_argument("summarize: empty sample");
  EmpiricalSummary s;
  s.name = std::move(name);
  s.count = v.size();
  s.burn_in = burn_in;
  s.mean = stats::mean(v);
  s.median = stats::median(v);
  s.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (double q : s.quantile_levels) s.quantiles.push_back(stats::quantile(v, q));
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    s.bin_edges = {lo, hi};
    s.bin_counts = {v.size()};
    return s;
  }
  s.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b)
    s.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(n_bins);
  s.bin_counts.assign(n_bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(n_bins));
    ++s.bin_counts[std::min(b, n_bins - 1)];
  }
  return s;
}

/// Values of obs at the stored checkpoints with t >= burn_in.
inline std::vector<double> occupation_values(const TrajectoryRecord& tr, double burn_in, const Observable& obs) {
  if (tr.checkpoints.empty()) throw std::invalid_argument("time_average_summary: record holds no checkpoint fields");
  if (!(burn_in < tr.times.back())) throw std::invalid_argument("time_average_summary: burn-in must precede the horizon");
  std::vector<double> v;
  for (std::size_t i = 0; i < tr.checkpoints.size(); ++i)
    if (tr.checkpoint_times[i] >= burn_in) v.push_back(obs.fn(tr.checkpoints[i]));
  if (v.empty()) throw std::invalid_argument("time_average_summary: no checkpoints after burn-in");
  return v;
}

inline EmpiricalSummary time_average_summary(const TrajectoryRecord& tr, double burn_in, const Observable& obs) {
  return summarize(obs.name, occupation_values(tr, burn_in, obs), burn_in);
}

// ---------------------------------------------------------------------------
// Uniqueness: laws of obs(X_T) from two initial conditions.

struct KSReport {
  std::string observable;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double x1_normH = 0.0;
  double x2_normH = 0.0;
  bool in_window = true;
  std::string label;
  std::size_t aborted = 0;

  bool passes(double level = 0.01) const { return p_value > level; }
};

inline std::string window_label(const NoiseSpec& spec) {
  return spec.ergodic_window() ? "inside the uniqueness window"
                               : "outside the uniqueness window (needs 3/2 < alpha < 2 and "
                                 "1/2 + 1/(2 alpha) < beta < 3/2 - 1/alpha)";
}

/// One ensemble member: path seed, observable (prefixed by the ensemble
/// label) and obs(X_T).
struct EnsembleRow {
  std::uint64_t seed = 0;
  std::string obs;
  double value = 0.0;
};

/// obs(X_T) for n paths started at x, path i driven by derive_seed(seed, i).
inline std::vector<std::vector<double>> terminal_values(const SpectralField& x, const NoiseSpec& spec,
                                                        const SimConfig& cfg, std::size_t n, std::uint64_t seed,
                                                        const std::vector<Observable>& obs, std::size_t* aborted,
                                                        std::vector<EnsembleRow>* rows = nullptr,
                                                        const std::string& label = "") {
  std::vector<std::vector<double>> per(n);
  std::vector<char> bad(n, 0);
  parallel_for(n, [&](std::size_t i) {
    SimConfig c = cfg;
    c.seed = derive_seed(seed, i);
    c.checkpoint_stride = 0;
    try {
      const auto tr = solve_trajectory(x, spec, c);
      for (const auto& o : obs) per[i].push_back(o.fn(tr.final_X));
    } catch (const TrajectoryAborted&) {
      bad[i] = 1;
    }
  });
  std::vector<std::vector<double>> out(obs.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      if (aborted) ++*aborted;
      continue;
    }
    for (std::size_t j = 0; j < obs.size(); ++j) {
      out[j].push_back(per[i][j]);
      if (rows) rows->push_back({derive_seed(seed, i), label + obs[j].name, per[i][j]});
    }
  }
  return out;
}

/// Independent-noise ensembles from x1 and x2 compared by two-sample KS on
/// obs(X_T), one report per observable. Runs outside the parameter window
/// are carried out and labeled.
inline std::vector<KSReport> uniqueness_probe(const SpectralField& x1, const SpectralField& x2, const NoiseSpec& spec,
                                              const SimConfig& cfg, std::size_t n_mc, std::uint64_t seed,
                                              double burn_in, const std::vector<Observable>& obs,
                                              std::vector<EnsembleRow>* rows = nullptr) {
  if (!(burn_in >= 0.0 && burn_in < cfg.T)) throw std::invalid_argument("uniqueness_probe: need 0 <= burn_in < T");
  std::size_t aborted = 0;
  const auto a = terminal_values(x1, spec, cfg, n_mc, derive_seed(seed, 1), obs, &aborted, rows, "x1:");
  const auto b = terminal_values(x2, spec, cfg, n_mc, derive_seed(seed, 2), obs, &aborted, rows, "x2:");
  std::vector<KSReport> out;
  for (std::size_t j = 0; j < obs.size(); ++j) {
    const auto ks = stats::ks_two_sample(a[j], b[j]);
    KSReport r;
    r.observable = obs[j].name;
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.n1 = ks.n1;
    r.n2 = ks.n2;
    r.x1_normH = norm_H(x1);
    r.x2_normH = norm_H(x2);
    r.in_window = spec.ergodic_window();
    r.label = window_label(spec);
    r.aborted = aborted;
    out.push_back(r);
  }
  return out;
}

struct NullReport {
  std::size_t repetitions = 0;
  std::size_t passes = 0;
  std::vector<double> statistics;
  double pass_fraction() const {
    return repetitions ? static_cast<double>(passes) / static_cast<double>(repetitions) : 0.0;
  }
};

/// Same-initial-condition null: repetitions of the probe with x1 = x2 and
/// independent seeds; counts KS passes at `level` for the first observable.
inline NullReport ks_null_repetitions(const SpectralField& x, const NoiseSpec& spec, const SimConfig& cfg,
                                      std::size_t n_mc, std::size_t repetitions, std::uint64_t seed,
                                      const Observable& obs, double level = 0.01) {
  NullReport rep;
  rep.repetitions = repetitions;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto ks = uniqueness_probe(x, x, spec, cfg, n_mc, derive_seed(seed, r), 0.0, {obs});
    rep.statistics.push_back(ks[0].statistic);
    rep.passes += ks[0].passes(level) ? 1 : 0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pathwise continuity in the initial datum:
//   R(delta, t) = ||X^x_t - X^y_t||_V / ||x - y||_H,  y = x + delta e.

struct ContinuityRow {
  double delta = 0.0;
  double t = 0.0;
  double R_max = 0.0;  // over paths
  double R_median = 0.0;
  bool exact_zero = false;  // delta = 0: identical runs
};

struct ContinuityTable {
  std::vector<ContinuityRow> rows;

  /// max over delta of R_max(delta, t) sqrt(t), for each t in t_list order.
  std::vector<double> scaled_envelope(const std::vector<double>& t_list) const {
    std::vector<double> out;
    for (double t : t_list) {
      double m = 0.0;
      for (const auto& r : rows)
        if (!r.exact_zero && std::abs(r.t - t) < 1e-12) m = std::max(m, r.R_max * std::sqrt(t));
      out.push_back(m);
    }
    return out;
  }

  /// Spread max/min of the scaled envelope across t_list.
  double rate_spread(const std::vector<double>& t_list) const {
    const auto e = scaled_envelope(t_list);
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    return *lo > 0.0 ? *hi / *lo : kInf;
  }

  /// Largest ratio R_max(d1, t) / R_max(d2, t) (or its inverse) across
  /// deltas at equal t; 1 for a map that is linear in delta.
  double linearity_spread() const {
    double worst = 1.0;
    for (const auto& a : rows)
      for (const auto& b : rows)
        if (!a.exact_zero && !b.exact_zero && std::abs(a.t - b.t) < 1e-12 && b.R_max > 0.0)
          worst = std::max(worst, a.R_max / b.R_max);
    return worst;
  }
};

/// Unit perturbation direction: a white-in-H field with ||e||_H = 1.
inline SpectralField unit_perturbation(int m, std::uint64_t seed) {
  RngStream rng(seed, stream_id(StreamTag::kAux, 0));
  SpectralField e(m);
  for (int k = 1; k <= m; ++k) {
    e.cos_at(k) = rng.next_normal();
    e.sin_at(k) = rng.next_normal();
  }
  e *= 1.0 / norm_H(e);
  return e;
}

/// Unit cosine modes e_1..e_m. For the flow linearized at 0 the worst
/// direction in the smoothing bound is a single mode.
inline std::vector<SpectralField> mode_directions(int m) {
  std::vector<SpectralField> out;
  for (int k = 1; k <= m; ++k) out.push_back(SpectralField::cosine_mode(m, k, 1.0));
  return out;
}

/// R per path is the maximum over the perturbation directions (default: one
/// random unit_perturbation).
inline ContinuityTable pathwise_continuity_probe(const SpectralField& x, const std::vector<double>& delta_list,
                                                 const std::vector<double>& t_list, const NoiseSpec& spec,
                                                 const SimConfig& cfg, std::size_t n_mc, std::uint64_t seed,
                                                 const std::vector<SpectralField>* directions = nullptr) {
  if (t_list.empty() || delta_list.empty()) throw std::invalid_argument("continuity: empty delta or t list");
  const std::vector<SpectralField> dirs =
      directions ? *directions : std::vector<SpectralField>{unit_perturbation(x.modes(), seed)};
  if (dirs.empty()) throw std::invalid_argument("continuity: no perturbation direction");
  std::vector<double> dir_norms;
  for (const auto& e : dirs) {
    if (e.modes() != x.modes()) throw std::invalid_argument("continuity: direction has the wrong mode count");
    dir_norms.push_back(norm_H(e));
    if (!(dir_norms.back() > 0.0)) throw std::invalid_argument("continuity: zero perturbation direction");
  }
  const double t_max = *std::max_element(t_list.begin(), t_list.end());
  SimConfig c = cfg;
  c.T = t_max;
  const std::size_t n_steps = c.steps();
  std::vector<std::size_t> idx;
  for (double t : t_list) {
    const double r = t / c.dt;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
      throw std::invalid_argument("continuity: every t must be a multiple of dt");
    idx.push_back(static_cast<std::size_t>(std::round(r)));
  }
  // values[i][d][j]: R for path i, delta d, time j.
  std::vector<std::vector<std::vector<double>>> values(n_mc);
  parallel_for(n_mc, [&](std::size_t i) {
    const ZPath zp = simulate_Z(spec, uniform_grid(t_max, n_steps), derive_seed(seed, i));
    SimConfig ci = c;
    ci.checkpoint_stride = 1;
    const auto base = solve_on_path(x, zp, ci);
    values[i].resize(delta_list.size());
    for (std::size_t d = 0; d < delta_list.size(); ++d) {
      if (delta_list[d] == 0.0) continue;
      values[i][d].assign(idx.size(), 0.0);
      for (std::size_t q = 0; q < dirs.size(); ++q) {
        const auto pert = solve_on_path(x + delta_list[d] * dirs[q], zp, ci);
        for (std::size_t j = 0; j < idx.size(); ++j)
          values[i][d][j] = std::max(values[i][d][j], norm_V(pert.checkpoints[idx[j]] - base.checkpoints[idx[j]]) /
                                                          (std::abs(delta_list[d]) * dir_norms[q]));
      }
    }
  });
  ContinuityTable table;
  for (std::size_t d = 0; d < delta_list.size(); ++d)
    for (std::size_t j = 0; j < t_list.size(); ++j) {
      ContinuityRow row;
      row.delta = delta_list[d];
      row.t = t_list[j];
      if (delta_list[d] == 0.0) {
        row.exact_zero = true;
        table.rows.push_back(row);
        continue;
      }
      std::vector<double> v;
      for (std::size_t i = 0; i < n_mc; ++i) v.push_back(values[i][d][j]);
      row.R_max = *std::max_element(v.begin(), v.end());
      row.R_median = stats::median(v);
      table.rows.push_back(row);
    }
  return table;
}

// ---------------------------------------------------------------------------
// Small-ball return: on {sup_{t<=T} ||Z_t||_V <= eps} the solution obeys
//   ||X_t||_H <= e^{-(pi - 3/2) t} R + C (eps^4 + eps^2 + eps).

inline constexpr double kReturnRate = kPi - 1.5;

struct ReturnReport {
  std::size_t n = 0;
  std::size_t accepted = 0;          // paths with sup ||Z||_V <= eps
  std::size_t bound_violations = 0;  // accepted paths breaking the contraction bound
  std::size_t returns = 0;           // paths (all of them) with ||X_T||_H < delta
  std::size_t aborted = 0;
  double acceptance = 0.0;
  double return_frequency = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  double C = 0.0;
  bool inconclusive = false;
  std::string note;
};

inline double return_bound(double t, double R, double eps, double C) {
  return std::exp(-kReturnRate * t) * R + C * (eps * eps * eps * eps + eps * eps + eps);
}

/// x0 = R e_1 (unit cosine mode) unless a start field is supplied.
inline ReturnReport small_ball_return_probe(double R, double eps, double delta, const NoiseSpec& spec,
                                            const SimConfig& cfg, std::size_t n_mc, std::uint64_t seed,
                                            const SpectralField* start = nullptr,
                                            double C = calibration::return_constant()) {
  if (!(R >= 0.0 && eps >= 0.0 && delta > 0.0)) throw std::invalid_argument("return probe: need R, eps >= 0, delta > 0");
  SpectralField x0 = start ? *start : SpectralField::cosine_mode(cfg.m, 1, R);
  if (start && std::abs(norm_H(x0) - R) > 1e-12 * std::max(1.0, R))
    throw std::invalid_argument("return probe: start field must have ||x0||_H = R");
  const std::size_t n_steps = cfg.steps();
  std::vector<char> accepted(n_mc, 0), violated(n_mc, 0), returned(n_mc, 0), aborted(n_mc, 0);
  parallel_for(n_mc, [&](std::size_t i) {
    const ZPath zp = simulate_Z(spec, uniform_grid(cfg.T, n_steps), derive_seed(seed, i));
    accepted[i] = path_sup_norm(zp, 0.5) <= eps ? 1 : 0;
    try {
      const auto tr = solve_on_path(x0, zp, cfg);
      returned[i] = tr.normH.back() < delta ? 1 : 0;
      if (accepted[i])
        for (std::size_t n = 0; n < tr.times.size(); ++n)
          if (tr.normH[n] > return_bound(tr.times[n], R, eps, C) * (1.0 + 1e-9)) violated[i] = 1;
    } catch (const TrajectoryAborted&) {
      aborted[i] = 1;
    }
  });
  ReturnReport rep;
  rep.n = n_mc;
  rep.C = C;
  for (std::size_t i = 0; i < n_mc; ++i) {
    rep.accepted += static_cast<std::size_t>(accepted[i]);
    rep.bound_violations += static_cast<std::size_t>(violated[i]);
    rep.returns += static_cast<std::size_t>(returned[i]);
    rep.aborted += static_cast<std::size_t>(aborted[i]);
  }
  rep.acceptance = n_mc ? static_cast<double>(rep.accepted) / static_cast<double>(n_mc) : 0.0;
  rep.return_frequency = n_mc ? static_cast<double>(rep.returns) / static_cast<double>(n_mc) : 0.0;
  const auto ci = stats::wilson_interval(rep.returns, n_mc);
  rep.wilson_lo = ci.lo;
  rep.wilson_hi = ci.hi;
  if (rep.accepted == 0) {
    rep.inconclusive = true;
    rep.note = "no path satisfied sup ||Z||_V <= eps; increase eps or lower c0";
  }
  return rep;
}

}  // namespace glstable
