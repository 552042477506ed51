#pragma once

// Stochastic convolution Z_t = int_0^t e^{-A(t-s)} dL_s, simulated mode by
// mode with the exact stable Ornstein-Uhlenbeck transition law, plus the
// experiments built on it: the integration-by-parts consistency check, the
// maximal-inequality scan and the small-ball (accessibility) probe.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "glstable/parallel.hpp"
#include "glstable/rng.hpp"
#include "glstable/spectral_field.hpp"
#include "glstable/stable_noise.hpp"
#include "glstable/stats.hpp"

namespace glstable {

/// Scale of int_0^h e^{-gamma (h-s)} beta_k dl(s):
///   beta_k ((1 - e^{-alpha gamma h}) / (alpha gamma))^{1/alpha}.
inline double ou_noise_scale(double gamma, double beta_k, double alpha, double h) {
  const double x = alpha * gamma * h;
  return beta_k * std::pow(-std::expm1(-x) / (alpha * gamma), 1.0 / alpha);
}

/// Exact transition of one stable OU mode over a step h.
inline double ou_mode_step(double z, double gamma, double beta_k, double alpha, double h, RngStream& rng) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ou_mode_step: gamma must be > 0");
  if (!(h > 0.0)) throw std::invalid_argument("ou_mode_step: h must be > 0");
  const double xi = sample_standard_stable(alpha, rng);
  return std::exp(-gamma * h) * z + ou_noise_scale(gamma, beta_k, alpha, h) * xi;
}

/// Advances Z on an arbitrary time grid. Step n consumes draw index n of
/// every real-mode stream, so the path of mode k is independent of the
/// cutoff m.
class OUStepper {
 public:
  OUStepper(const NoiseSpec& spec, std::uint64_t seed, StreamTag tag = StreamTag::kNoise)
      : spec_(spec), src_(spec.alpha, seed, tag), z_(spec.m) {
    spec_.validate();
  }

  const SpectralField& state() const { return z_; }
  std::uint64_t steps_taken() const { return step_; }
  const NoiseSpec& spec() const { return spec_; }

  void advance(double h) {
    if (!(h > 0.0)) throw std::invalid_argument("OUStepper: step must be > 0");
    if (h != cached_h_) rebuild(h);
    if (spec_.c0 == 0.0) {
      z_ *= 0.0;
    } else {
      for (int k = 1; k <= spec_.m; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        z_.cos_at(k) = decay_[i] * z_.cos_at(k) + scale_[i] * src_.standard(2 * i, step_);
        z_.sin_at(k) = decay_[i] * z_.sin_at(k) + scale_[i] * src_.standard(2 * i + 1, step_);
      }
    }
    ++step_;
  }

 private:
  void rebuild(double h) {
    cached_h_ = h;
    decay_.assign(static_cast<std::size_t>(spec_.m), 0.0);
    scale_.assign(static_cast<std::size_t>(spec_.m), 0.0);
    for (int k = 1; k <= spec_.m; ++k) {
      const double g = eigenvalue(k);
      decay_[static_cast<std::size_t>(k - 1)] = std::exp(-g * h);
      scale_[static_cast<std::size_t>(k - 1)] = ou_noise_scale(g, spec_.beta_k(k), spec_.alpha, h);
    }
  }

  NoiseSpec spec_;
  NoiseSource src_;
  SpectralField z_;
  std::uint64_t step_ = 0;
  double cached_h_ = -1.0;
  std::vector<double> decay_;
  std::vector<double> scale_;
};

struct ZPath {
  std::vector<double> times;
  std::vector<SpectralField> fields;
  NoiseSpec spec;
  std::uint64_t seed = 0;

  std::size_t size() const { return times.size(); }
};

inline std::vector<double> uniform_grid(double T, std::size_t n_steps) {
  if (!(T > 0.0) || n_steps == 0) throw std::invalid_argument("uniform_grid: need T > 0 and n_steps >= 1");
  std::vector<double> t(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n_steps);
  return t;
}

inline ZPath simulate_Z(const NoiseSpec& spec, const std::vector<double>& times, std::uint64_t seed) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("simulate_Z: grid must start at t = 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("simulate_Z: grid must be strictly increasing");
  OUStepper stepper(spec, seed);
  ZPath zp{times, {}, spec, seed};
  zp.fields.reserve(times.size());
  zp.fields.push_back(stepper.state());
  for (std::size_t i = 1; i < times.size(); ++i) {
    stepper.advance(times[i] - times[i - 1]);
    zp.fields.push_back(stepper.state());
  }
  return zp;
}

/// Keeps every `stride`-th grid point (the coarse view of the same path).
inline ZPath subsample(const ZPath& zp, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("subsample: stride must be >= 1");
  ZPath out{{}, {}, zp.spec, zp.seed};
  for (std::size_t i = 0; i < zp.size(); i += stride) {
    out.times.push_back(zp.times[i]);
    out.fields.push_back(zp.fields[i]);
  }
  return out;
}

/// max over the grid of ||A^sigma Z_t||_H (sigma = 1/2 gives K_T).
inline double path_sup_norm(const ZPath& zp, double sigma) {
  double s = 0.0;
  for (const auto& f : zp.fields) s = std::max(s, sobolev_norm(f, sigma));
  return s;
}

// ---------------------------------------------------------------------------
// Integration by parts: Z_t = L_t - int_0^t A e^{-A(t-s)} L_s ds.

/// Drives both constructions of Z from the same increments dL(n), n = 0..n-1,
/// over a uniform step h, and returns max_n ||Z^duhamel_n - Z^ibp_n||_H.
/// Duhamel: z_{n+1} = e^{-gamma h} z_n + dl_n. IBP: L_n minus the left
/// Riemann sum of gamma e^{-gamma (t_n - s)} L_s.
inline double ibp_residual(int m, double h, std::size_t n_steps,
                           const std::function<SpectralField(std::size_t)>& increment) {
  SpectralField z(m), l(m), riemann(m);
  double worst = 0.0;
  std::vector<double> decay(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) decay[static_cast<std::size_t>(k - 1)] = std::exp(-eigenvalue(k) * h);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const SpectralField dl = increment(n);
    for (int k = 1; k <= m; ++k) {
      const double e = decay[static_cast<std::size_t>(k - 1)];
      const double gh = eigenvalue(k) * h;
      riemann.cos_at(k) = e * (riemann.cos_at(k) + gh * l.cos_at(k));
      riemann.sin_at(k) = e * (riemann.sin_at(k) + gh * l.sin_at(k));
      z.cos_at(k) = e * z.cos_at(k) + dl.cos_at(k);
      z.sin_at(k) = e * z.sin_at(k) + dl.sin_at(k);
    }
    l += dl;
    worst = std::max(worst, norm_H(z - (l - riemann)));
  }
  return worst;
}

/// IBP residual on a grid of n_fine steps over [0, T]. The noise is built
/// from n_atom >= n_fine atomic increments (n_atom a multiple of n_fine), so
/// runs with different n_fine and the same n_atom share one noise path.
inline double ibp_consistency_check(const NoiseSpec& spec, double T, std::size_t n_fine, std::uint64_t seed,
                                    std::size_t n_atom = 0) {
  spec.validate();
  if (n_atom == 0) n_atom = n_fine;
  if (n_fine == 0 || n_atom % n_fine != 0)
    throw std::invalid_argument("ibp_consistency_check: n_atom must be a positive multiple of n_fine");
  const double h = T / static_cast<double>(n_fine);
  if (!(eigenvalue(spec.m) * h < 0.5))
    throw std::invalid_argument("ibp_consistency_check: need gamma_m * h < 0.5 on the fine grid");
  const std::size_t per = n_atom / n_fine;
  const NoiseSource src(spec.alpha, seed);
  const double h_atom = T / static_cast<double>(n_atom);
  return ibp_residual(spec.m, h, n_fine, [&](std::size_t n) {
    SpectralField dl(spec.m);
    for (std::size_t j = 0; j < per; ++j) dl += cylindrical_increment(spec, h_atom, src, n * per + j);
    return dl;
  });
}

// ---------------------------------------------------------------------------
// Exactness of the mode step against an explicit Euler oracle.

struct OUExactnessResult {
  double gamma = 0.0;
  double beta_k = 0.0;
  double alpha = 0.0;
  stats::KSResult ks;
};

/// Two-sample KS between n marginals z(t) from the exact step (n_exact steps
/// of size t / n_exact) and n marginals from Euler with step h_euler:
///   z <- z - gamma z h + beta_k h^{1/alpha} xi.
/// Both start at z = 0 and use disjoint RNG streams.
inline OUExactnessResult ou_exactness_check(double gamma, double beta_k, double alpha, double t, std::size_t n,
                                            double h_euler, std::uint64_t seed, std::size_t n_exact = 1) {
  check_stable_index(alpha);
  if (!(gamma > 0.0 && t > 0.0 && h_euler > 0.0)) throw std::invalid_argument("ou_exactness_check: need gamma, t, h > 0");
  if (!(gamma * h_euler < 0.5)) throw std::invalid_argument("ou_exactness_check: need gamma * h_euler < 0.5");
  if (n < 2 || n_exact == 0) throw std::invalid_argument("ou_exactness_check: need n >= 2 and n_exact >= 1");
  const auto n_euler = static_cast<std::size_t>(std::llround(t / h_euler));
  const double h_exact = t / static_cast<double>(n_exact);
  const double kick = beta_k * std::pow(h_euler, 1.0 / alpha);
  std::vector<double> exact(n), euler(n);
  parallel_for(n, [&](std::size_t i) {
    RngStream a(seed, stream_id(StreamTag::kScalar, 2 * i));
    RngStream b(seed, stream_id(StreamTag::kEuler, 2 * i + 1));
    double z = 0.0;
    for (std::size_t j = 0; j < n_exact; ++j) z = ou_mode_step(z, gamma, beta_k, alpha, h_exact, a);
    exact[i] = z;
    double y = 0.0;
    for (std::size_t j = 0; j < n_euler; ++j) y += -gamma * y * h_euler + kick * sample_standard_stable(alpha, b);
    euler[i] = y;
  });
  return {gamma, beta_k, alpha, stats::ks_two_sample(std::move(exact), std::move(euler))};
}

// ---------------------------------------------------------------------------
// Maximal inequality E sup_{t<=T} ||A^theta Z_t||^p <= C T^{p/alpha}.

enum class ScanProcess { kConvolution, kNoise };

struct ScanRow {
  double T = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_lo = std::numeric_limits<double>::quiet_NaN();
  double slope_hi = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
};

inline void check_theta_window(const NoiseSpec& spec, double theta, const char* who) {
  if (!(theta >= 0.0 && theta < spec.beta - 0.5 / spec.alpha))
    throw std::invalid_argument(std::string(who) + ": theta must satisfy 0 <= theta < beta - 1/(2 alpha)");
}

/// sup over a uniform grid of n_steps steps on [0, T] of ||A^theta P_t||_H,
/// where P is Z (exact OU steps) or L (cumulative increments).
inline double grid_sup(const NoiseSpec& spec, ScanProcess process, double theta, double T, std::size_t n_steps,
                       std::uint64_t seed) {
  const double h = T / static_cast<double>(n_steps);
  double sup = 0.0;
  if (process == ScanProcess::kConvolution) {
    OUStepper st(spec, seed);
    for (std::size_t n = 0; n < n_steps; ++n) {
      st.advance(h);
      sup = std::max(sup, sobolev_norm(st.state(), theta));
    }
  } else {
    const NoiseSource src(spec.alpha, seed);
    SpectralField l(spec.m);
    for (std::size_t n = 0; n < n_steps; ++n) {
      l += cylindrical_increment(spec, h, src, n);
      sup = std::max(sup, sobolev_norm(l, theta));
    }
  }
  return sup;
}

/// E sup_{t<=T} ||A^theta Z_t||_H^p (or L_t) for each T from fresh paths per
/// horizon, and the slope of log estimate against log T.
inline ScanResult maximal_inequality_scan(const NoiseSpec& spec, double theta, double p,
                                          const std::vector<double>& T_list, std::size_t n_mc, std::uint64_t seed,
                                          ScanProcess process = ScanProcess::kConvolution,
                                          std::size_t steps_per_T = 128) {
  spec.validate();
  check_theta_window(spec, theta, "maximal_inequality_scan");
  if (!(p > 0.0 && p < spec.alpha))
    throw std::invalid_argument("maximal_inequality_scan: p must satisfy 0 < p < alpha");
  if (T_list.size() < 2 || n_mc == 0) throw std::invalid_argument("maximal_inequality_scan: need >= 2 horizons");
  ScanResult res;
  for (std::size_t j = 0; j < T_list.size(); ++j) {
    const double T = T_list[j];
    const std::uint64_t horizon_seed = derive_seed(seed, j);
    std::vector<double> vals(n_mc);
    parallel_for(n_mc, [&](std::size_t i) {
      vals[i] = std::pow(grid_sup(spec, process, theta, T, steps_per_T, derive_seed(horizon_seed, i)), p);
    });
    res.rows.push_back({T, stats::mean(vals), stats::standard_error(vals)});
  }
  std::vector<double> lx, ly;
  for (const auto& r : res.rows) {
    if (!(r.estimate > 0.0)) {
      res.degenerate = true;
      return res;
    }
    lx.push_back(std::log(r.T));
    ly.push_back(std::log(r.estimate));
  }
  const auto fit = stats::fit_line(lx, ly);
  res.slope = fit.slope;
  res.slope_lo = fit.slope - 1.96 * fit.slope_se;
  res.slope_hi = fit.slope + 1.96 * fit.slope_se;
  return res;
}

// ---------------------------------------------------------------------------
// Small-ball probability P(sup_{t<=T} ||A^theta Z_t||_H <= eps) > 0.

struct AccessibilityResult {
  double estimate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  std::size_t successes = 0;
  std::size_t n = 0;
};

/// Whether path `seed` stays in the eps-ball on the grid; stops at the
/// first exit.
inline bool stays_in_ball(const NoiseSpec& spec, double theta, double eps, double T, std::size_t n_steps,
                          std::uint64_t seed) {
  OUStepper st(spec, seed);
  const double h = T / static_cast<double>(n_steps);
  for (std::size_t n = 0; n < n_steps; ++n) {
    st.advance(h);
    if (sobolev_norm(st.state(), theta) > eps) return false;
  }
  return true;
}

inline AccessibilityResult accessibility_probe(const NoiseSpec& spec, double theta_tilde, double eps, double T,
                                               std::size_t n_mc, std::uint64_t seed, std::size_t n_steps = 256) {
  spec.validate();
  check_theta_window(spec, theta_tilde, "accessibility_probe");
  std::vector<char> hit(n_mc, 0);
  parallel_for(n_mc, [&](std::size_t i) {
    hit[i] = stays_in_ball(spec, theta_tilde, eps, T, n_steps, derive_seed(seed, i)) ? 1 : 0;
  });
  AccessibilityResult r;
  r.n = n_mc;
  for (char c : hit) r.successes += static_cast<std::size_t>(c);
  r.estimate = n_mc ? static_cast<double>(r.successes) / static_cast<double>(n_mc) : 0.0;
  const auto ci = stats::wilson_interval(r.successes, n_mc);
  r.wilson_lo = ci.lo;
  r.wilson_hi = ci.hi;
  return r;
}

/// Pilot calibration of c0: returns the sample of sup_{t<=T} ||A^theta Z_t||
/// at c0 = 1. Z is linear in c0, so any target level follows by rescaling.
inline std::vector<double> unit_amplitude_sup_sample(const NoiseSpec& spec, double theta, double T,
                                                     std::size_t n_steps, std::size_t n_pilot, std::uint64_t seed) {
  const NoiseSpec unit = spec.with_c0(1.0);
  std::vector<double> s(n_pilot);
  parallel_for(n_pilot, [&](std::size_t i) {
    s[i] = grid_sup(unit, ScanProcess::kConvolution, theta, T, n_steps, derive_seed(seed, i));
  });
  return s;
}

}  // namespace glstable
