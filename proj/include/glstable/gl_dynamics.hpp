#pragma once

// Ginzburg-Landau dynamics dX + [AX + N(X)] dt = dL with N(u) = -(u - u^3),
// solved through the splitting X = Y + Z: Z is the exactly sampled stable
// convolution and Y solves the random PDE dY/dt = -AY - N(Y + Z), advanced
// with the exponential Euler scheme
//   Y' = e^{-Ah} Y - h phi_1(-Ah) N(Y + Z),   phi_1(z) = (e^z - 1)/z.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glstable/ou_convolution.hpp"
#include "glstable/spectral_field.hpp"
#include "glstable/stable_noise.hpp"

namespace glstable {

/// Drift selector. kLinear replaces N by N(u) = -u and kZero drops it; both
/// exist for closed-form checks of the integrators.
enum class Drift { kGinzburgLandau, kZero, kLinear };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Nonlinearity.

struct DriftValue {
  SpectralField value;
  double max_abs = 0.0;  // max_j |u(xi_j)| on the evaluation grid
};

inline void check_cubic_grid(int m, int n_g) {
  if (n_g < min_cubic_grid(m))
    throw std::invalid_argument("nonlinearity: grid size must be >= 4m+1 to evaluate the cubic without aliasing (m = " +
                                std::to_string(m) + ", n_g = " + std::to_string(n_g) + ")");
}

/// N(u) = -(u - u^3) = u^3 - u, evaluated on the grid, projected back onto
/// the mean-zero space and truncated to u's mode cutoff.
inline DriftValue evaluate_nonlinearity(const SpectralField& u, int n_g) {
  const int m = u.modes();
  check_cubic_grid(m, n_g);
  auto& fg = fourier_grid(n_g);
  thread_local std::vector<double> v;
  v.resize(static_cast<std::size_t>(n_g));
  fg.synthesize(u, v);
  double max_abs = 0.0, mean = 0.0;
  for (double& x : v) {
    max_abs = std::max(max_abs, std::abs(x));
    x = x * x * x - x;
    mean += x;
  }
  mean /= static_cast<double>(n_g);
  for (double& x : v) x -= mean;
  DriftValue out{SpectralField(m), max_abs};
  fg.analyze(v, out.value);
  return out;
}

inline SpectralField nonlinearity(const SpectralField& u, int n_g) { return evaluate_nonlinearity(u, n_g).value; }

/// Quintic smoothstep cutoff: 1 on [0,1], 0 on [2,inf), C^2 in between.
inline double cutoff(double z) {
  const double t = std::clamp(z - 1.0, 0.0, 1.0);
  return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

/// N^rho(u) = N(u) chi(||u||_V / rho).
inline SpectralField truncated_nonlinearity(const SpectralField& u, double rho, int n_g) {
  if (!(rho > 0.0)) throw std::invalid_argument("truncated_nonlinearity: rho must be > 0");
  const double chi = std::isinf(rho) ? 1.0 : cutoff(norm_V(u) / rho);
  if (chi == 0.0) {
    check_cubic_grid(u.modes(), n_g);
    return SpectralField(u.modes());
  }
  SpectralField n = nonlinearity(u, n_g);
  if (chi != 1.0) n *= chi;
  return n;
}

// ---------------------------------------------------------------------------
// Configuration and records.

struct SimConfig {
  double dt = 1e-3;
  double T = 1.0;
  int m = 64;
  int n_g = 0;  // 0 selects dealiased_grid_size(m)
  double rho = kInf;
  double adapt_threshold = 50.0;  // ||Z||_V level that forces a halved step
  int max_halvings = 12;
  std::uint64_t seed = 1;
  Drift drift = Drift::kGinzburgLandau;
  std::size_t checkpoint_stride = 0;  // 0 keeps no intermediate fields

  int grid() const { return n_g > 0 ? n_g : dealiased_grid_size(m); }

  std::size_t steps() const {
    const double r = T / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, r))
      throw std::invalid_argument("SimConfig: horizon T must be an integer multiple of dt");
    return static_cast<std::size_t>(n);
  }

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(T > 0.0)) throw std::invalid_argument("SimConfig: T must be > 0");
    if (m < 1) throw std::invalid_argument("SimConfig: m must be >= 1");
    if (drift == Drift::kGinzburgLandau) check_cubic_grid(m, grid());
    if (!(rho > 0.0)) throw std::invalid_argument("SimConfig: rho must be > 0 (use infinity for no truncation)");
    if (max_halvings < 0) throw std::invalid_argument("SimConfig: max_halvings must be >= 0");
    (void)steps();
  }

  SimConfig with_modes(int mm) const {
    SimConfig c = *this;
    c.m = mm;
    c.n_g = 0;
    return c;
  }
};

/// Thrown when a step still fails after max_halvings halvings.
class TrajectoryAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> normH;    // ||X_t||_H
  std::vector<double> normV;    // ||X_t||_V
  std::vector<double> normH_Y;  // ||Y_t||_H
  std::vector<double> normV_Z;  // ||Z_t||_V
  std::vector<double> normH_Z;  // ||Z_t||_H
  std::vector<double> checkpoint_times;
  std::vector<SpectralField> checkpoints;  // X at checkpoint times
  SpectralField final_X;
  SpectralField final_Y;
  std::optional<double> tau_rho;
  std::uint64_t seed = 0;
  SimConfig config;
  NoiseSpec spec;
  std::size_t substepped_intervals = 0;

  /// Index of the grid time closest to t.
  std::size_t index_of(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
    if (it == times.end()) throw std::out_of_range("TrajectoryRecord: time beyond horizon");
    return static_cast<std::size_t>(it - times.begin());
  }
};

// ---------------------------------------------------------------------------
// Exponential Euler.

/// h phi_1(-gamma h) = (1 - e^{-gamma h}) / gamma.
inline double phi1_weight(double gamma, double h) { return -std::expm1(-gamma * h) / gamma; }

inline SpectralField drift_of(const SpectralField& u, const SimConfig& cfg, double* max_abs = nullptr) {
  switch (cfg.drift) {
    case Drift::kZero:
      if (max_abs) *max_abs = 0.0;
      return SpectralField(u.modes());
    case Drift::kLinear:
      if (max_abs) *max_abs = 0.0;
      return -1.0 * u;
    case Drift::kGinzburgLandau:
      break;
  }
  const double chi = std::isinf(cfg.rho) ? 1.0 : cutoff(norm_V(u) / cfg.rho);
  if (chi == 0.0) {
    if (max_abs) *max_abs = 0.0;
    return SpectralField(u.modes());
  }
  auto d = evaluate_nonlinearity(u, cfg.grid());
  if (chi != 1.0) d.value *= chi;
  if (max_abs) *max_abs = d.max_abs * std::sqrt(chi);
  return std::move(d.value);
}

/// Y' = e^{-Ah} Y - (1 - e^{-Ah}) A^{-1} F, given the drift F = N(Y + Z).
inline SpectralField exponential_euler(const SpectralField& Y, const SpectralField& F, double h) {
  SpectralField out(Y.modes());
  for (int k = 1; k <= Y.modes(); ++k) {
    const double g = eigenvalue(k);
    const double e = std::exp(-g * h);
    const double w = phi1_weight(g, h);
    out.cos_at(k) = e * Y.cos_at(k) - w * F.cos_at(k);
    out.sin_at(k) = e * Y.sin_at(k) - w * F.sin_at(k);
  }
  return out;
}

/// One exponential-Euler step of the Y-equation with Z frozen at Z_now.
/// Throws std::domain_error when the drift or the result is not finite.
inline SpectralField step_mild(const SpectralField& Y, const SpectralField& Z_now, double h, const SimConfig& cfg) {
  if (!(h > 0.0)) throw std::invalid_argument("step_mild: h must be > 0");
  const SpectralField F = drift_of(Y + Z_now, cfg);
  if (!F.is_finite()) throw std::domain_error("step_mild: non-finite drift");
  SpectralField out = exponential_euler(Y, F, h);
  if (!out.is_finite()) throw std::domain_error("step_mild: non-finite state");
  return out;
}

/// Adaptive interval advance. The interval is split into 2^j exponential-
/// Euler substeps with Z held at its left-endpoint value: j starts at 1
/// when ||Z_now||_V exceeds the threshold and grows while a substep sees a
/// non-finite drift or cubic stiffness h_sub * 3 max|u|^2 > 1.
class MildIntegrator {
 public:
  explicit MildIntegrator(const SimConfig& cfg) : cfg_(cfg) {}

  std::size_t substepped_intervals() const { return substepped_; }

  SpectralField advance(const SpectralField& Y, const SpectralField& Z_now, double h, double t_now) {
    int j = (norm_V(Z_now) > cfg_.adapt_threshold) ? 1 : 0;
    for (;; ++j) {
      if (j > cfg_.max_halvings)
        throw TrajectoryAborted("step budget exhausted at t = " + std::to_string(t_now) +
                                " after " + std::to_string(cfg_.max_halvings) +
                                " halvings (||Z||_V = " + std::to_string(norm_V(Z_now)) +
                                "): heavy-tailed jump too large for the step budget");
      const std::size_t n_sub = std::size_t{1} << j;
      const double hs = h / static_cast<double>(n_sub);
      SpectralField y = Y;
      bool ok = true;
      for (std::size_t s = 0; s < n_sub && ok; ++s) {
        double max_abs = 0.0;
        const SpectralField F = drift_of(y + Z_now, cfg_, &max_abs);
        if (!F.is_finite() || hs * 3.0 * max_abs * max_abs > 1.0) {
          ok = false;
          break;
        }
        y = exponential_euler(y, F, hs);
        ok = y.is_finite();
      }
      if (ok) {
        if (j > 0) ++substepped_;
        return y;
      }
    }
  }

 private:
  SimConfig cfg_;
  std::size_t substepped_ = 0;
};

namespace detail {

inline void record_point(TrajectoryRecord& tr, double t, const SpectralField& Y, const SpectralField& Z,
                         std::size_t index, const SimConfig& cfg) {
  const SpectralField X = Y + Z;
  tr.times.push_back(t);
  tr.normH.push_back(norm_H(X));
  tr.normV.push_back(norm_V(X));
  tr.normH_Y.push_back(norm_H(Y));
  tr.normV_Z.push_back(norm_V(Z));
  tr.normH_Z.push_back(norm_H(Z));
  if (cfg.checkpoint_stride > 0 && index % cfg.checkpoint_stride == 0) {
    tr.checkpoint_times.push_back(t);
    tr.checkpoints.push_back(X);
  }
}

}  // namespace detail

/// First grid time with ||X_t||_V >= rho, if any.
inline std::optional<double> stopping_time(const TrajectoryRecord& tr, double rho) {
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    if (tr.normV[i] >= rho) return tr.times[i];
  return std::nullopt;
}

/// Mild solution on the uniform grid t_n = n dt, with Z generated on the fly
/// from cfg.seed. When z_out is given the Z path is stored there as well.
inline TrajectoryRecord solve_trajectory(const SpectralField& x0, const NoiseSpec& spec, const SimConfig& cfg,
                                         ZPath* z_out = nullptr) {
  spec.validate();
  cfg.validate();
  if (spec.m != cfg.m) throw std::invalid_argument("solve_trajectory: noise and solver mode cutoffs differ");
  if (x0.modes() != cfg.m) throw std::invalid_argument("solve_trajectory: x0 must have the solver's mode cutoff");
  const std::size_t n_steps = cfg.steps();
  TrajectoryRecord tr;
  tr.seed = cfg.seed;
  tr.config = cfg;
  tr.spec = spec;
  tr.times.reserve(n_steps + 1);
  OUStepper zs(spec, cfg.seed);
  MildIntegrator integ(cfg);
  SpectralField Y = x0;
  if (z_out) *z_out = ZPath{{0.0}, {zs.state()}, spec, cfg.seed};
  detail::record_point(tr, 0.0, Y, zs.state(), 0, cfg);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = cfg.dt * static_cast<double>(n);
    Y = integ.advance(Y, zs.state(), cfg.dt, t);
    zs.advance(cfg.dt);
    const double t1 = cfg.dt * static_cast<double>(n + 1);
    detail::record_point(tr, t1, Y, zs.state(), n + 1, cfg);
    if (z_out) {
      z_out->times.push_back(t1);
      z_out->fields.push_back(zs.state());
    }
  }
  tr.final_Y = Y;
  tr.final_X = Y + zs.state();
  tr.substepped_intervals = integ.substepped_intervals();
  if (!std::isinf(cfg.rho)) tr.tau_rho = stopping_time(tr, cfg.rho);
  return tr;
}

/// Mild solution on the grid of a given Z path (possibly non-uniform).
inline TrajectoryRecord solve_on_path(const SpectralField& x0, const ZPath& zp, const SimConfig& cfg) {
  if (zp.size() < 2) throw std::invalid_argument("solve_on_path: path needs >= 2 grid points");
  if (x0.modes() != zp.fields.front().modes())
    throw std::invalid_argument("solve_on_path: x0 and Z mode cutoffs differ");
  SimConfig c = cfg;
  c.m = x0.modes();
  if (c.drift == Drift::kGinzburgLandau) check_cubic_grid(c.m, c.grid());
  TrajectoryRecord tr;
  tr.seed = zp.seed;
  tr.config = c;
  tr.spec = zp.spec;
  MildIntegrator integ(c);
  SpectralField Y = x0;
  detail::record_point(tr, zp.times[0], Y, zp.fields[0], 0, c);
  for (std::size_t n = 0; n + 1 < zp.size(); ++n) {
    Y = integ.advance(Y, zp.fields[n], zp.times[n + 1] - zp.times[n], zp.times[n]);
    detail::record_point(tr, zp.times[n + 1], Y, zp.fields[n + 1], n + 1, c);
  }
  tr.final_Y = Y;
  tr.final_X = Y + zp.fields.back();
  tr.substepped_intervals = integ.substepped_intervals();
  if (!std::isinf(c.rho)) tr.tau_rho = stopping_time(tr, c.rho);
  return tr;
}

// ---------------------------------------------------------------------------
// Picard iteration for the local mild problem
//   (F u)_t = e^{-At} x - int_0^t e^{-A(t-s)} N(u_s + Z_s) ds.
// The time integral uses exponential weights against the piecewise-linear
// interpolant of the drift (second order), so the fixed point is an
// independent discretization from the exponential Euler solver.

struct PicardResult {
  std::vector<double> times;
  std::vector<SpectralField> path;  // fixed-point iterate u_t (the Y component)
  std::vector<double> distances;    // d(u^{j+1}, u^j), j = 0, 1, ...
  std::vector<double> ratios;       // distances[j+1] / distances[j]
  bool converged = false;
  bool contraction_failed = false;
  int iterations = 0;
  double max_ratio = 0.0;  // over iterations above the round-off floor
};

/// sup_t t^{1/6} ||A^{1/6}(u_t - v_t)||_H over the grid.
inline double picard_metric(const std::vector<double>& times, const std::vector<SpectralField>& u,
                            const std::vector<SpectralField>& v) {
  double d = 0.0;
  for (std::size_t n = 0; n < times.size(); ++n)
    d = std::max(d, std::pow(times[n], 1.0 / 6.0) * sobolev_norm(u[n] - v[n], 1.0 / 6.0));
  return d;
}

inline PicardResult picard_local_solve(const SpectralField& x0, const ZPath& zp, double T, int n_iter,
                                       const SimConfig& cfg, double tol = 1e-13) {
  if (!(T > 0.0)) throw std::invalid_argument("picard_local_solve: T must be > 0");
  const int m = x0.modes();
  std::size_t n_pts = 0;
  while (n_pts < zp.size() && zp.times[n_pts] <= T * (1.0 + 1e-12)) ++n_pts;
  if (n_pts < 2) throw std::invalid_argument("picard_local_solve: Z grid has no interval inside [0, T]");
  PicardResult res;
  res.times.assign(zp.times.begin(), zp.times.begin() + static_cast<std::ptrdiff_t>(n_pts));

  // Per-interval, per-mode weights: int_0^h e^{-g(h-s)} (g0 + s/h (g1-g0)) ds = w0 g0 + w1 g1.
  std::vector<std::vector<double>> decay(n_pts - 1), w0(n_pts - 1), w1(n_pts - 1);
  for (std::size_t n = 0; n + 1 < n_pts; ++n) {
    const double h = res.times[n + 1] - res.times[n];
    decay[n].resize(static_cast<std::size_t>(m));
    w0[n].resize(static_cast<std::size_t>(m));
    w1[n].resize(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
      const double g = eigenvalue(k);
      const double x = g * h;
      const double p1 = phi1_weight(g, h);
      // q = (1/h) int_0^h s e^{-g(h-s)} ds = (1 - phi_1(-x)) / g.
      const double q = x < 1e-4 ? h * (0.5 - x / 6.0 + x * x / 24.0) : (1.0 - p1 / h) / g;
      const auto i = static_cast<std::size_t>(k - 1);
      decay[n][i] = std::exp(-x);
      w0[n][i] = p1 - q;
      w1[n][i] = q;
    }
  }

  auto semigroup_path = [&] {
    std::vector<SpectralField> u;
    u.reserve(n_pts);
    for (std::size_t n = 0; n < n_pts; ++n) u.push_back(apply_semigroup(x0, res.times[n]));
    return u;
  };
  auto apply_map = [&](const std::vector<SpectralField>& u) {
    std::vector<SpectralField> g(n_pts);
    for (std::size_t n = 0; n < n_pts; ++n) g[n] = drift_of(u[n] + zp.fields[n], cfg);
    std::vector<SpectralField> out;
    out.reserve(n_pts);
    SpectralField s(m);  // int_0^{t_n} e^{-A(t_n - s)} N ds
    out.push_back(x0);
    for (std::size_t n = 0; n + 1 < n_pts; ++n) {
      for (int k = 1; k <= m; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        s.cos_at(k) = decay[n][i] * s.cos_at(k) + w0[n][i] * g[n].cos_at(k) + w1[n][i] * g[n + 1].cos_at(k);
        s.sin_at(k) = decay[n][i] * s.sin_at(k) + w0[n][i] * g[n].sin_at(k) + w1[n][i] * g[n + 1].sin_at(k);
      }
      out.push_back(apply_semigroup(x0, res.times[n + 1]) - s);
    }
    return out;
  };

  std::vector<SpectralField> u = semigroup_path();
  const double scale = std::max(1.0, norm_H(x0));
  int rising = 0;
  for (int it = 0; it < n_iter; ++it) {
    std::vector<SpectralField> next = apply_map(u);
    for (const auto& f : next)
      if (!f.is_finite()) {
        res.contraction_failed = true;
        res.iterations = it + 1;
        return res;
      }
    const double d = picard_metric(res.times, next, u);
    u = std::move(next);
    res.iterations = it + 1;
    if (!res.distances.empty()) {
      const double prev = res.distances.back();
      const double r = prev > 0.0 ? d / prev : 0.0;
      res.ratios.push_back(r);
      if (prev > 1e3 * tol * scale) res.max_ratio = std::max(res.max_ratio, r);
      rising = (d > prev) ? rising + 1 : 0;
      if (rising >= 3) {
        res.distances.push_back(d);
        res.contraction_failed = true;
        res.path = std::move(u);
        return res;
      }
    }
    res.distances.push_back(d);
    if (d <= tol * scale) {
      res.converged = true;
      break;
    }
  }
  res.path = std::move(u);
  return res;
}

/// Halves T from T0 until every successive Picard ratio above the round-off
/// floor is <= target. Returns the accepted horizon and its result.
struct PicardSearch {
  double T = 0.0;
  PicardResult result;
  int halvings = 0;
};

inline PicardSearch picard_contraction_search(const SpectralField& x0, const ZPath& zp, double T0, int n_iter,
                                              const SimConfig& cfg, double target = 0.5, int max_halvings = 20) {
  PicardSearch s;
  double T = T0;
  for (int h = 0; h <= max_halvings; ++h, T *= 0.5) {
    auto r = picard_local_solve(x0, zp, T, n_iter, cfg);
    if (r.converged && !r.contraction_failed && r.max_ratio <= target) {
      s.T = T;
      s.result = std::move(r);
      s.halvings = h;
      return s;
    }
  }
  throw std::runtime_error("picard_contraction_search: no horizon with the target contraction ratio");
}

/// Cross-method check on common noise. Z is sampled on the grid of step
/// h/2; the exponential Euler solver runs on both the h grid (every second
/// point) and the h/2 grid, and the Picard fixed point is computed on the
/// h/2 grid. The Richardson estimate of the h-solver error is
/// 2 ||Y_h(T) - Y_{h/2}(T)||.
struct PicardAgreement {
  PicardResult picard;
  double solver_error_estimate = 0.0;
  double distance = 0.0;  // ||u_T - Y_h(T)||_H
  double ratio() const { return solver_error_estimate > 0.0 ? distance / solver_error_estimate : kInf; }
};

inline PicardAgreement picard_solver_agreement(const SpectralField& x0, const NoiseSpec& spec, double T, double h,
                                               int n_iter, const SimConfig& cfg, std::uint64_t seed) {
  const double r = T / h;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("picard_solver_agreement: T must be a multiple of h");
  const auto n = static_cast<std::size_t>(std::round(r));
  const ZPath fine = simulate_Z(spec, uniform_grid(T, 2 * n), seed);
  const ZPath coarse = subsample(fine, 2);
  const SpectralField y_h = solve_on_path(x0, coarse, cfg).final_Y;
  const SpectralField y_h2 = solve_on_path(x0, fine, cfg).final_Y;
  PicardAgreement out;
  out.picard = picard_local_solve(x0, fine, T, n_iter, cfg);
  out.solver_error_estimate = 2.0 * norm_H(y_h - y_h2);
  out.distance = out.picard.path.empty() ? kInf : norm_H(out.picard.path.back() - y_h);
  return out;
}

// ---------------------------------------------------------------------------
// Truncation agreement: X^rho = X while ||X||_V <= rho, on common noise.

struct TruncationAgreement {
  std::optional<double> tau;
  double max_diff = 0.0;  // max ||X^rho_t - X_t||_H over grid times before tau
  std::size_t compared = 0;
};

inline TruncationAgreement truncation_agreement_check(const SpectralField& x0, const NoiseSpec& spec,
                                                      const SimConfig& cfg, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("truncation_agreement_check: rho must be >= 0");
  SimConfig full = cfg;
  full.rho = kInf;
  full.checkpoint_stride = 1;
  SimConfig trunc = full;
  trunc.rho = rho > 0.0 ? rho : std::numeric_limits<double>::min();
  const auto a = solve_trajectory(x0, spec, full);
  const auto b = solve_trajectory(x0, spec, trunc);
  TruncationAgreement out;
  out.tau = stopping_time(a, rho);
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (out.tau && a.times[i] >= *out.tau) break;
    out.max_diff = std::max(out.max_diff, norm_H(a.checkpoints[i] - b.checkpoints[i]));
    ++out.compared;
  }
  return out;
}

// ---------------------------------------------------------------------------
// A-priori energy estimate
//   ||Y_t||^2 <= e^{-(2pi-3)t} ||x||^2 + int_0^t e^{-(2pi-3)(t-s)} (||Z_s||^2 + C ||Z_s||_V^4) ds.

inline constexpr double kEnergyRate = 2.0 * kPi - 3.0;

struct EnergyReport {
  bool ok = true;
  std::size_t violations = 0;
  double worst_margin = kInf;  // min over t of (rhs - lhs) / max(rhs, tiny)
  double worst_time = 0.0;
  std::optional<double> first_violation;
};

/// Checks the estimate at every grid time. The integral is taken with Z
/// piecewise constant from the left, the same convention as the solver.
inline EnergyReport energy_bound_check(const std::vector<double>& times, const std::vector<double>& normH_Y,
                                       const std::vector<double>& normH_Z, const std::vector<double>& normV_Z,
                                       double C_star, double rel_tol = 1e-6) {
  EnergyReport rep;
  if (times.empty()) return rep;
  const double x2 = normH_Y[0] * normH_Y[0];
  double integral = 0.0;
  for (std::size_t n = 0; n < times.size(); ++n) {
    if (n > 0) {
      const double h = times[n] - times[n - 1];
      const double zh = normH_Z[n - 1], zv = normV_Z[n - 1];
      const double forcing = zh * zh + C_star * zv * zv * zv * zv;
      integral = std::exp(-kEnergyRate * h) * integral + (-std::expm1(-kEnergyRate * h) / kEnergyRate) * forcing;
    }
    const double rhs = std::exp(-kEnergyRate * times[n]) * x2 + integral;
    const double lhs = normH_Y[n] * normH_Y[n];
    const double margin = (rhs - lhs) / std::max(rhs, 1e-300);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_time = times[n];
    }
    if (lhs > rhs * (1.0 + rel_tol) && lhs > 1e-300) {
      ++rep.violations;
      if (!rep.first_violation) rep.first_violation = times[n];
    }
  }
  rep.ok = rep.violations == 0;
  return rep;
}

inline EnergyReport energy_bound_check(const TrajectoryRecord& tr, const ZPath& zp, double C_star,
                                       double rel_tol = 1e-6) {
  if (zp.size() != tr.times.size()) throw std::invalid_argument("energy_bound_check: Z path and record grids differ");
  std::vector<double> zh, zv;
  for (const auto& f : zp.fields) {
    zh.push_back(norm_H(f));
    zv.push_back(norm_V(f));
  }
  return energy_bound_check(tr.times, tr.normH_Y, zh, zv, C_star, rel_tol);
}

inline EnergyReport energy_bound_check(const TrajectoryRecord& tr, double C_star, double rel_tol = 1e-6) {
  return energy_bound_check(tr.times, tr.normH_Y, tr.normH_Z, tr.normV_Z, C_star, rel_tol);
}

}  // namespace glstable
