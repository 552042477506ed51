#pragma once

// Symmetric alpha-stable sampling and the cylindrical noise
//   L_t = sum_k beta_k l_k(t) e_k,   beta_k = c0 gamma_k^{-beta},
// with independent standard symmetric stable processes l_k attached to each
// real basis mode.

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "glstable/rng.hpp"
#include "glstable/spectral_field.hpp"

namespace glstable {

/// One draw of a standard symmetric alpha-stable variable, E e^{i l z} =
/// e^{-|l|^alpha}, from a pair of open-interval uniforms (Chambers-Mallows-
/// Stuck). alpha = 2 gives N(0, 2).
inline double stable_from_uniforms(double alpha, double u_angle, double u_exp) {
  const double v = kPi * (u_angle - 0.5);
  const double w = -std::log(u_exp);
  if (alpha == 1.0) return std::tan(v);
  const double cv = std::cos(v);
  const double lead = std::sin(alpha * v) / std::pow(cv, 1.0 / alpha);
  const double tail = std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
  return lead * tail;
}

inline void check_stable_index(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("stable index alpha must lie in (0, 2]");
}

inline double sample_standard_stable(double alpha, RngStream& rng) {
  check_stable_index(alpha);
  const auto u = rng.next_uniform_pair();
  return stable_from_uniforms(alpha, u[0], u[1]);
}

/// Increment l(t+h) - l(t) of a stable process, multiplied by `scale`.
inline double stable_increment(double alpha, double scale, double h, RngStream& rng) {
  check_stable_index(alpha);
  if (!(scale >= 0.0)) throw std::invalid_argument("stable_increment: scale must be >= 0");
  if (!(h > 0.0)) throw std::invalid_argument("stable_increment: h must be > 0");
  const double z = sample_standard_stable(alpha, rng);
  if (scale == 0.0) return 0.0;
  return scale * std::pow(h, 1.0 / alpha) * z;
}

struct NoiseSpec {
  double alpha = 1.8;
  double beta = 0.85;
  double c0 = 1.0;
  int m = 64;

  /// Lower edge of the admissible decay window: 1/2 + 1/(2 alpha).
  double beta_lower() const { return 0.5 + 0.5 / alpha; }
  /// Upper edge of the uniqueness window: 3/2 - 1/alpha.
  double beta_upper_ergodic() const { return 1.5 - 1.0 / alpha; }

  bool ergodic_window() const {
    return alpha > 1.5 && alpha < 2.0 && beta > beta_lower() && beta < beta_upper_ergodic();
  }

  double beta_k(int k) const { return c0 * std::exp(-beta * std::log(eigenvalue(k))); }

  /// Exponent q in beta_k^alpha gamma_k^{alpha/2} ~ k^{-q}; the series over
  /// all modes converges iff q > 1.
  double v_series_exponent() const { return 2.0 * alpha * beta - alpha; }

  /// sum_{k<=m} beta_k^alpha gamma_k^{alpha/2} plus an integral bound on the
  /// k > m tail (the full series for the untruncated noise).
  double v_series_bound() const {
    double s = 0.0;
    for (int k = 1; k <= m; ++k) s += std::pow(beta_k(k), alpha) * std::pow(eigenvalue(k), 0.5 * alpha);
    const double q = v_series_exponent();
    const double lead = std::pow(c0, alpha) * std::pow(4.0 * kPi * kPi, alpha * (0.5 - beta));
    return s + lead * std::pow(static_cast<double>(m), 1.0 - q) / (q - 1.0);
  }

  /// Throws std::invalid_argument naming the violated condition.
  void validate() const {
    if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("NoiseSpec: alpha must lie in (1, 2)");
    if (!(beta > beta_lower()))
      throw std::invalid_argument("NoiseSpec: decay exponent must satisfy beta > 1/2 + 1/(2 alpha)");
    if (!(c0 >= 0.0) || !std::isfinite(c0)) throw std::invalid_argument("NoiseSpec: c0 must be finite and >= 0");
    if (m < 1) throw std::invalid_argument("NoiseSpec: mode cutoff m must be >= 1");
    if (!std::isfinite(v_series_bound()))
      throw std::invalid_argument("NoiseSpec: sum_k beta_k^alpha gamma_k^{alpha/2} is not finite");
  }

  NoiseSpec with_modes(int mm) const {
    NoiseSpec s = *this;
    s.m = mm;
    return s;
  }
  NoiseSpec with_c0(double c) const {
    NoiseSpec s = *this;
    s.c0 = c;
    return s;
  }
};

/// Standard stable draws addressed by (seed, real-mode slot, step): the
/// draw for a given mode and step does not depend on the mode cutoff, the
/// number of steps taken, or any other mode.
class NoiseSource {
 public:
  NoiseSource(double alpha, std::uint64_t seed, StreamTag tag = StreamTag::kNoise)
      : alpha_(alpha), seed_(seed), tag_(tag) {
    check_stable_index(alpha);
  }

  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }

  double standard(std::size_t slot, std::uint64_t step) const {
    RngStream s(seed_, stream_id(tag_, slot));
    s.seek(step);
    const auto u = s.next_uniform_pair();
    return stable_from_uniforms(alpha_, u[0], u[1]);
  }

 private:
  double alpha_;
  std::uint64_t seed_;
  StreamTag tag_;
};

/// Increment Delta L over a step of length h, using draw index `step`.
inline SpectralField cylindrical_increment(const NoiseSpec& spec, double h, const NoiseSource& src,
                                           std::uint64_t step) {
  if (!(h > 0.0)) throw std::invalid_argument("cylindrical_increment: h must be > 0");
  SpectralField dl(spec.m);
  if (spec.c0 == 0.0) return dl;
  const double hs = std::pow(h, 1.0 / spec.alpha);
  for (int k = 1; k <= spec.m; ++k) {
    const double s = spec.beta_k(k) * hs;
    const auto base = static_cast<std::size_t>(2 * (k - 1));
    dl.cos_at(k) = s * src.standard(base, step);
    dl.sin_at(k) = s * src.standard(base + 1, step);
  }
  return dl;
}

/// Audit dump: rows "step,mode,value" where mode is the real-mode slot.
inline void write_increment_rows(std::ostream& os, std::uint64_t step, const SpectralField& dl) {
  for (std::size_t s = 0; s < 2 * static_cast<std::size_t>(dl.modes()); ++s)
    os << step << ',' << s << ',' << dl.slot(s) << '\n';
}

}  // namespace glstable
