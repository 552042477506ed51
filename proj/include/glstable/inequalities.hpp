#pragma once

// Property checks for the cubic nonlinearity N(u) = u^3 - u:
//   <x, -N(x)> <= 1/4
//   ||N(x)||_V <= C (||x||_V + ||x||_V^3)
//   ||N(x) - N(y)||_H <= C (1 + ||A^{1/4}x||^2 + ||A^{1/4}y||^2) ||x - y||_H
//   ||N(x) - N(y)||_H <= C (1 + ||A^s x||^2 + ||A^s y||^2) ||A^s (x - y)||_H,  s = 1/6
//   ||N(x)||_H <= C (1 + ||A^s x||^3),  s = 1/6
//   <-N(u+v), u> <= 3/2 ||u||^2 + 1/2 ||v||^2 + C ||v||_V^4
// The constants are existential, so they are calibrated on a pilot sample
// (largest observed ratio times a safety factor) and then checked on fresh
// samples drawn from the same families.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "glstable/gl_dynamics.hpp"
#include "glstable/rng.hpp"
#include "glstable/spectral_field.hpp"
#include "glstable/stats.hpp"

namespace glstable {

inline constexpr double kLowSigma = 1.0 / 6.0;

/// Random field families used by the suite and by the calibration.
enum class FieldFamily { kWhiteV, kWhiteH, kSingleMode, kLargeMode };

inline constexpr std::array<FieldFamily, 4> kAllFamilies = {FieldFamily::kWhiteV, FieldFamily::kWhiteH,
                                                            FieldFamily::kSingleMode, FieldFamily::kLargeMode};

inline const char* family_name(FieldFamily f) {
  switch (f) {
    case FieldFamily::kWhiteV: return "white-V";
    case FieldFamily::kWhiteH: return "white-H";
    case FieldFamily::kSingleMode: return "single-mode";
    case FieldFamily::kLargeMode: return "large-amplitude-mode";
  }
  return "?";
}

namespace detail {

inline double log_uniform(RngStream& rng, double lo, double hi) {
  return lo * std::exp(rng.next_uniform() * std::log(hi / lo));
}

inline int uniform_int(RngStream& rng, int lo, int hi) {
  const int n = hi - lo + 1;
  return lo + std::min(n - 1, static_cast<int>(rng.next_uniform() * n));
}

}  // namespace detail

/// One draw from a family at mode cutoff m.
///   white-V: Gaussian coefficients with variance 1/gamma_k, ||x||_V log-uniform in [1e-2, 1e2]
///   white-H: Gaussian coefficients up to a random cutoff, ||x||_H log-uniform in [1e-2, 1e2]
///   single-mode: one cos or sin mode k <= m, amplitude log-uniform in [1e-2, 1e2]
///   large-amplitude-mode: c e_k with k <= 4 and c log-uniform in [1, 100]
inline SpectralField sample_field(FieldFamily family, int m, RngStream& rng) {
  SpectralField x(m);
  switch (family) {
    case FieldFamily::kWhiteV: {
      for (int k = 1; k <= m; ++k) {
        const double s = 1.0 / std::sqrt(eigenvalue(k));
        x.cos_at(k) = s * rng.next_normal();
        x.sin_at(k) = s * rng.next_normal();
      }
      const double r = detail::log_uniform(rng, 1e-2, 1e2);
      x *= r / norm_V(x);
      break;
    }
    case FieldFamily::kWhiteH: {
      const int cut = detail::uniform_int(rng, 1, m);
      for (int k = 1; k <= cut; ++k) {
        x.cos_at(k) = rng.next_normal();
        x.sin_at(k) = rng.next_normal();
      }
      const double r = detail::log_uniform(rng, 1e-2, 1e2);
      x *= r / norm_H(x);
      break;
    }
    case FieldFamily::kSingleMode:
    case FieldFamily::kLargeMode: {
      const bool large = family == FieldFamily::kLargeMode;
      const int k = detail::uniform_int(rng, 1, large ? std::min(4, m) : m);
      const double c = large ? detail::log_uniform(rng, 1.0, 1e2) : detail::log_uniform(rng, 1e-2, 1e2);
      if (rng.next_uniform() < 0.5)
        x.cos_at(k) = c;
      else
        x.sin_at(k) = c;
      break;
    }
  }
  return x;
}

/// Draw i of the suite: a field x, a partner y (independent draw or a
/// perturbation x + d w) and the pair (u, v) = (t x + w', x) for the
/// mixed inner-product bound.
struct SuiteSample {
  FieldFamily family;
  SpectralField x, y, u, v;
};

inline SuiteSample suite_sample(std::size_t i, int m, std::uint64_t seed, StreamTag tag) {
  RngStream rng(seed, stream_id(tag, i));
  const FieldFamily fam = kAllFamilies[i % kAllFamilies.size()];
  SuiteSample s{fam, sample_field(fam, m, rng), {}, {}, {}};
  if ((i / kAllFamilies.size()) % 2 == 0) {
    s.y = sample_field(kAllFamilies[static_cast<std::size_t>(detail::uniform_int(rng, 0, 3))], m, rng);
  } else {
    SpectralField w = sample_field(FieldFamily::kWhiteH, m, rng);
    const double d = detail::log_uniform(rng, 1e-6, 1.0);
    s.y = s.x + (d * std::max(norm_H(s.x), 1e-3) / norm_H(w)) * w;
  }
  const double t = -1.5 + 2.0 * rng.next_uniform();
  SpectralField w = sample_field(FieldFamily::kWhiteH, m, rng);
  const double d = detail::log_uniform(rng, 1e-4, 1.0);
  s.u = t * s.x + (d * std::max(norm_H(s.x), 1e-3) / norm_H(w)) * w;
  s.v = s.x;
  return s;
}

/// Ratios of left-hand sides to the constant-free right-hand shapes.
struct InequalityRatios {
  double inner = 0.0;  // <x, -N(x)>, compared with 1/4 directly
  double nv = 0.0;
  double nxy_quarter = 0.0;
  double nxy_low = 0.0;
  double nh = 0.0;
  double nuvu = 0.0;  // (lhs - 3/2||u||^2 - 1/2||v||^2)_+ / ||v||_V^4
};

inline InequalityRatios inequality_ratios(const SuiteSample& s, int n_g) {
  InequalityRatios r;
  const SpectralField nx = nonlinearity(s.x, n_g);
  const SpectralField ny = nonlinearity(s.y, n_g);
  r.inner = -inner_H(s.x, nx);
  const double xv = norm_V(s.x);
  r.nv = xv > 0.0 ? norm_V(nx) / (xv + xv * xv * xv) : 0.0;
  const SpectralField dn = nx - ny;
  const SpectralField dxy = s.x - s.y;
  const double dH = norm_H(dxy);
  if (dH > 0.0) {
    const double xq = sobolev_norm(s.x, 0.25), yq = sobolev_norm(s.y, 0.25);
    r.nxy_quarter = norm_H(dn) / ((1.0 + xq * xq + yq * yq) * dH);
    const double xl = sobolev_norm(s.x, kLowSigma), yl = sobolev_norm(s.y, kLowSigma);
    r.nxy_low = norm_H(dn) / ((1.0 + xl * xl + yl * yl) * sobolev_norm(dxy, kLowSigma));
  }
  const double xl = sobolev_norm(s.x, kLowSigma);
  r.nh = norm_H(nx) / (1.0 + xl * xl * xl);
  const double lhs = -inner_H(nonlinearity(s.u + s.v, n_g), s.u);
  const double uh = norm_H(s.u), vh = norm_H(s.v), vv = norm_V(s.v);
  const double excess = lhs - 1.5 * uh * uh - 0.5 * vh * vh;
  r.nuvu = (vv > 0.0 && excess > 0.0) ? excess / (vv * vv * vv * vv) : 0.0;
  return r;
}

/// Constants of the five calibrated bounds.
struct InequalityConstants {
  double nv = 0.0;
  double nxy_quarter = 0.0;
  double nxy_low = 0.0;
  double nh = 0.0;
  double nuvu = 0.0;
};

inline void fold_max(InequalityRatios& acc, const InequalityRatios& r) {
  acc.inner = std::max(acc.inner, r.inner);
  acc.nv = std::max(acc.nv, r.nv);
  acc.nxy_quarter = std::max(acc.nxy_quarter, r.nxy_quarter);
  acc.nxy_low = std::max(acc.nxy_low, r.nxy_low);
  acc.nh = std::max(acc.nh, r.nh);
  acc.nuvu = std::max(acc.nuvu, r.nuvu);
}

/// Largest ratios over n samples of the pilot stream.
inline InequalityRatios sup_ratios(std::size_t n, int m, std::uint64_t seed, StreamTag tag) {
  const int n_g = dealiased_grid_size(m);
  InequalityRatios acc;
  acc.inner = -kInf;
  for (std::size_t i = 0; i < n; ++i) fold_max(acc, inequality_ratios(suite_sample(i, m, seed, tag), n_g));
  return acc;
}

/// Calibration: largest pilot ratio times `safety`.
inline InequalityConstants calibrate_constants(std::size_t n_pilot, int m, std::uint64_t seed, double safety = 2.0) {
  const auto r = sup_ratios(n_pilot, m, seed, StreamTag::kPilot);
  return {safety * r.nv, safety * r.nxy_quarter, safety * r.nxy_low, safety * r.nh, safety * r.nuvu};
}

/// Rigorous value for the mixed bound: pointwise -(u^4 + 3u^3 v + 3u^2 v^2 + u v^3)
/// <= (27/256) v^4, and int v^4 <= ||v||_inf^2 ||v||_H^2 <= ||v||_V^4 / (48 pi^2)
/// (||v||_inf <= ||v||_V / sqrt(12), ||v||_H <= ||v||_V / (2 pi)).
inline constexpr double kMixedBoundAnalytic = 27.0 / (256.0 * 48.0 * kPi * kPi);

// ---------------------------------------------------------------------------
// The suite.

struct ScalingCheck {
  double slope_V_min = kInf, slope_V_max = -kInf;
  double slope_H_min = kInf, slope_H_max = -kInf;
  bool truncation_kills = true;  // N^rho(s x) = 0 once ||s x||_V >= 2 rho
};

/// log-log slopes of ||N(s x)||_V and ||N(s x)||_H over s = 2^5..2^10 for
/// n_fields random x with ||x||_H = 1.
inline ScalingCheck cubic_scaling_check(std::size_t n_fields, int m, std::uint64_t seed, double rho = 1.0) {
  const int n_g = dealiased_grid_size(m);
  ScalingCheck out;
  for (std::size_t i = 0; i < n_fields; ++i) {
    RngStream rng(seed, stream_id(StreamTag::kFamily, i));
    SpectralField x = sample_field(kAllFamilies[i % 3], m, rng);
    x *= 1.0 / norm_H(x);
    std::vector<double> ls, lv, lh;
    for (int j = 5; j <= 10; ++j) {
      const double s = std::ldexp(1.0, j);
      const SpectralField n = nonlinearity(s * x, n_g);
      ls.push_back(std::log(s));
      lv.push_back(std::log(norm_V(n)));
      lh.push_back(std::log(norm_H(n)));
      const SpectralField nr = truncated_nonlinearity(s * x, rho, n_g);
      if (norm_V(s * x) >= 2.0 * rho && norm_H(nr) != 0.0) out.truncation_kills = false;
    }
    const double sv = stats::fit_line(ls, lv).slope, sh = stats::fit_line(ls, lh).slope;
    out.slope_V_min = std::min(out.slope_V_min, sv);
    out.slope_V_max = std::max(out.slope_V_max, sv);
    out.slope_H_min = std::min(out.slope_H_min, sh);
    out.slope_H_max = std::max(out.slope_H_max, sh);
  }
  return out;
}

struct SuiteReport {
  std::size_t n_samples = 0;
  std::size_t inner_violations = 0;  // <x,-N(x)> > 1/4
  std::size_t nv_violations = 0;
  std::size_t nxy_quarter_violations = 0;
  std::size_t nxy_low_violations = 0;
  std::size_t nh_violations = 0;
  std::size_t nuvu_violations = 0;
  std::size_t truncated_violations = 0;  // ||N^rho(x)||_V <= 8 C_nv (rho + rho^3)
  std::size_t scaling_violations = 0;    // amplitude-scaled copies s x, s = 1..2^10
  InequalityRatios sup;
  ScalingCheck scaling;
  InequalityConstants constants;

  std::size_t total_violations() const {
    return inner_violations + nv_violations + nxy_quarter_violations + nxy_low_violations + nh_violations +
           nuvu_violations + truncated_violations + scaling_violations;
  }
  bool scaling_ok(double tol = 0.05) const {
    return std::abs(scaling.slope_V_min - 3.0) <= tol && std::abs(scaling.slope_V_max - 3.0) <= tol &&
           std::abs(scaling.slope_H_min - 3.0) <= tol && std::abs(scaling.slope_H_max - 3.0) <= tol &&
           scaling.truncation_kills;
  }
  bool ok() const { return total_violations() == 0 && scaling_ok(); }
};

inline std::size_t count_bound_violations(const InequalityRatios& r, const InequalityConstants& c,
                                          SuiteReport& rep) {
  std::size_t before = rep.inner_violations + rep.nv_violations + rep.nxy_quarter_violations +
                       rep.nxy_low_violations + rep.nh_violations + rep.nuvu_violations;
  if (r.inner > 0.25 + 1e-12) ++rep.inner_violations;
  if (r.nv > c.nv) ++rep.nv_violations;
  if (r.nxy_quarter > c.nxy_quarter) ++rep.nxy_quarter_violations;
  if (r.nxy_low > c.nxy_low) ++rep.nxy_low_violations;
  if (r.nh > c.nh) ++rep.nh_violations;
  if (r.nuvu > c.nuvu) ++rep.nuvu_violations;
  return rep.inner_violations + rep.nv_violations + rep.nxy_quarter_violations + rep.nxy_low_violations +
         rep.nh_violations + rep.nuvu_violations - before;
}

/// Checks every bound on n_samples fresh fields (stream tag kFamily), on
/// amplitude-scaled copies s x for a subset, and the cubic growth exponent.
inline SuiteReport inequality_suite(std::size_t n_samples, std::uint64_t seed, const InequalityConstants& c,
                                    int m = 64, std::size_t n_scaled = 64, double rho = 1.0) {
  const int n_g = dealiased_grid_size(m);
  SuiteReport rep;
  rep.n_samples = n_samples;
  rep.constants = c;
  rep.sup.inner = -kInf;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const SuiteSample s = suite_sample(i, m, seed, StreamTag::kFamily);
    const InequalityRatios r = inequality_ratios(s, n_g);
    fold_max(rep.sup, r);
    count_bound_violations(r, c, rep);
    const SpectralField nr = truncated_nonlinearity(s.x, rho, n_g);
    if (norm_V(nr) > 8.0 * c.nv * (rho + rho * rho * rho)) ++rep.truncated_violations;
    if (i < n_scaled) {
      SuiteReport scratch;
      for (int j = 0; j <= 10; ++j) {
        const double f = std::ldexp(1.0, j);
        SuiteSample t{s.family, f * s.x, f * s.y, f * s.u, f * s.v};
        const InequalityRatios rs = inequality_ratios(t, n_g);
        fold_max(rep.sup, rs);
        if (count_bound_violations(rs, c, scratch) > 0) ++rep.scaling_violations;
      }
    }
  }
  rep.scaling = cubic_scaling_check(20, m, derive_seed(seed, 0x5CA1E), rho);
  return rep;
}

}  // namespace glstable
