#pragma once

// Small statistics toolkit for the Monte Carlo experiments: moments,
// quantiles, Wilson intervals, least squares, the two-sample
// Kolmogorov-Smirnov test and empirical characteristic functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace glstable::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double standard_error(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  const auto n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

/// Linear-interpolation quantile (R type 7) of an unsorted sample.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion (z = 1.96 for 95%).
inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Exact endpoints at the boundaries.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

/// Least-squares fit y ~ a + b T + c sqrt(T) with b, c >= 0 (active-set
/// enumeration over the four sign patterns; a is unconstrained).
struct AffineRootFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;
};

namespace detail {

// Solves the normal equations for the selected columns of [1, T, sqrt T].
inline bool solve_columns(std::span<const double> t, std::span<const double> y, std::array<bool, 3> use,
                          std::array<double, 3>& coef) {
  std::vector<int> cols;
  for (int j = 0; j < 3; ++j)
    if (use[static_cast<std::size_t>(j)]) cols.push_back(j);
  const std::size_t k = cols.size();
  auto basis = [&](int j, double tt) { return j == 0 ? 1.0 : (j == 1 ? tt : std::sqrt(tt)); };
  std::vector<double> g(k * k, 0.0), r(k, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t p = 0; p < k; ++p) {
      r[p] += basis(cols[p], t[i]) * y[i];
      for (std::size_t q = 0; q < k; ++q) g[p * k + q] += basis(cols[p], t[i]) * basis(cols[q], t[i]);
    }
  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < k; ++i)
      if (std::abs(g[i * k + c]) > std::abs(g[piv * k + c])) piv = i;
    if (std::abs(g[piv * k + c]) < 1e-300) return false;
    if (piv != c) {
      for (std::size_t q = 0; q < k; ++q) std::swap(g[c * k + q], g[piv * k + q]);
      std::swap(r[c], r[piv]);
    }
    for (std::size_t i = c + 1; i < k; ++i) {
      const double f = g[i * k + c] / g[c * k + c];
      for (std::size_t q = c; q < k; ++q) g[i * k + q] -= f * g[c * k + q];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> sol(k, 0.0);
  for (std::size_t c = k; c-- > 0;) {
    double s = r[c];
    for (std::size_t q = c + 1; q < k; ++q) s -= g[c * k + q] * sol[q];
    sol[c] = s / g[c * k + c];
  }
  coef = {0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < k; ++p) coef[static_cast<std::size_t>(cols[p])] = sol[p];
  return true;
}

}  // namespace detail

inline AffineRootFit fit_affine_root(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 3) throw std::invalid_argument("fit_affine_root: need >= 3 points");
  AffineRootFit best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 4; ++mask) {
    const std::array<bool, 3> use = {true, (mask & 1) != 0, (mask & 2) != 0};
    std::array<double, 3> coef{};
    if (!detail::solve_columns(t, y, use, coef)) continue;
    if (coef[1] < 0.0 || coef[2] < 0.0) continue;
    double sse = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = y[i] - coef[0] - coef[1] * t[i] - coef[2] * std::sqrt(t[i]);
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best.a = coef[0];
      best.b = coef[1];
      best.c = coef[2];
    }
  }
  const double my = mean(y);
  double syy = 0.0;
  best.residuals.clear();
  for (std::size_t i = 0; i < t.size(); ++i) {
    syy += (y[i] - my) * (y[i] - my);
    best.residuals.push_back(y[i] - best.a - best.b * t[i] - best.c * std::sqrt(t[i]));
  }
  best.r2 = syy > 0.0 ? 1.0 - best_sse / syy : 1.0;
  return best;
}

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 0.27) {
    // Dual series for small lambda, Q = 1 - sqrt(2 pi)/lambda sum e^{-(2j-1)^2 pi^2 / (8 lambda^2)}.
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int j = 1; j <= 5; ++j) s += std::exp(c * (2 * j - 1) * (2 * j - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Two-sample KS statistic sup |F1 - F2| with the asymptotic p-value
/// (effective-size correction of Stephens).
inline KSResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  KSResult r;
  r.statistic = d;
  r.n1 = x.size();
  r.n2 = y.size();
  const double ne = std::sqrt(n1 * n2 / (n1 + n2));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

/// Empirical characteristic function E cos(lambda z) (the imaginary part of
/// a symmetric law's CF vanishes) together with the sine part.
inline std::complex<double> empirical_cf(std::span<const double> z, double lambda) {
  double c = 0.0, s = 0.0;
  for (double v : z) {
    c += std::cos(lambda * v);
    s += std::sin(lambda * v);
  }
  const auto n = static_cast<double>(z.size());
  return {c / n, s / n};
}

}  // namespace glstable::stats
