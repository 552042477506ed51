#pragma once

// Mean-zero real fields on the torus R/Z in the real orthonormal basis
//   x(xi) = sum_{k=1}^m sqrt(2) (a_k cos(2 pi k xi) + b_k sin(2 pi k xi)),
// fractional Sobolev norms, fractional powers of A = -d^2/dxi^2, the heat
// semigroup e^{-At}, and grid <-> spectral transforms backed by FFTW.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace glstable {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Eigenvalue of A on mode k: 4 pi^2 k^2.
inline constexpr double eigenvalue(int k) { return 4.0 * kPi * kPi * static_cast<double>(k) * k; }

/// gamma_k^{2 sigma}, with exact fast paths for the common exponents.
inline double eigen_weight(int k, double sigma) {
  if (sigma == 0.0) return 1.0;
  const double g = eigenvalue(k);
  if (sigma == 0.5) return g;
  if (sigma == 1.0) return g * g;
  if (sigma == 0.25) return std::sqrt(g);
  return std::exp(2.0 * sigma * std::log(g));
}

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int m) : a_(check_m(m), 0.0), b_(static_cast<std::size_t>(m), 0.0) {}
  SpectralField(std::vector<double> a, std::vector<double> b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.empty() || a_.size() != b_.size())
      throw std::invalid_argument("SpectralField: amplitude arrays must be non-empty and equal length");
  }

  static SpectralField zero(int m) { return SpectralField(m); }
  static SpectralField cosine_mode(int m, int k, double amplitude) {
    SpectralField x(m);
    x.cos_at(k) = amplitude;
    return x;
  }
  static SpectralField sine_mode(int m, int k, double amplitude) {
    SpectralField x(m);
    x.sin_at(k) = amplitude;
    return x;
  }

  int modes() const { return static_cast<int>(a_.size()); }

  /// 1-based mode access.
  double& cos_at(int k) { return a_.at(static_cast<std::size_t>(k - 1)); }
  double& sin_at(int k) { return b_.at(static_cast<std::size_t>(k - 1)); }
  double cos_at(int k) const { return a_.at(static_cast<std::size_t>(k - 1)); }
  double sin_at(int k) const { return b_.at(static_cast<std::size_t>(k - 1)); }

  std::span<double> cos_coeffs() { return a_; }
  std::span<double> sin_coeffs() { return b_; }
  std::span<const double> cos_coeffs() const { return a_; }
  std::span<const double> sin_coeffs() const { return b_; }

  /// Real-mode slot addressing: slot 2(k-1) is cos k, 2(k-1)+1 is sin k.
  double& slot(std::size_t s) { return (s % 2 == 0) ? a_[s / 2] : b_[s / 2]; }
  double slot(std::size_t s) const { return (s % 2 == 0) ? a_[s / 2] : b_[s / 2]; }

  bool is_finite() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); }) &&
           std::all_of(b_.begin(), b_.end(), [](double v) { return std::isfinite(v); });
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      a_[i] += o.a_[i];
      b_[i] += o.b_[i];
    }
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      a_[i] -= o.a_[i];
      b_[i] -= o.b_[i];
    }
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& v : a_) v *= s;
    for (auto& v : b_) v *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField x, const SpectralField& y) { return x += y; }
  friend SpectralField operator-(SpectralField x, const SpectralField& y) { return x -= y; }
  friend SpectralField operator*(double s, SpectralField x) { return x *= s; }
  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  static std::size_t check_m(int m) {
    if (m < 1) throw std::invalid_argument("SpectralField: mode cutoff must be >= 1");
    return static_cast<std::size_t>(m);
  }
  void check_same(const SpectralField& o) const {
    if (o.a_.size() != a_.size()) throw std::invalid_argument("SpectralField: mode cutoff mismatch");
  }

  std::vector<double> a_;
  std::vector<double> b_;
};

/// ||A^sigma x||_H = (sum_k gamma_k^{2 sigma} (a_k^2 + b_k^2))^{1/2}.
inline double sobolev_norm(const SpectralField& x, double sigma) {
  if (sigma < -1.0) throw std::invalid_argument("sobolev_norm: sigma must be >= -1");
  const auto a = x.cos_coeffs();
  const auto b = x.sin_coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += eigen_weight(static_cast<int>(i) + 1, sigma) * (a[i] * a[i] + b[i] * b[i]);
  return std::sqrt(s);
}

inline double norm_H(const SpectralField& x) { return sobolev_norm(x, 0.0); }
inline double norm_V(const SpectralField& x) { return sobolev_norm(x, 0.5); }

inline double inner_H(const SpectralField& x, const SpectralField& y) {
  if (x.modes() != y.modes()) throw std::invalid_argument("inner_H: mode cutoff mismatch");
  double s = 0.0;
  for (int k = 1; k <= x.modes(); ++k) s += x.cos_at(k) * y.cos_at(k) + x.sin_at(k) * y.sin_at(k);
  return s;
}

/// Scales mode k by gamma_k^sigma.
inline SpectralField apply_A_power(SpectralField x, double sigma) {
  auto a = x.cos_coeffs();
  auto b = x.sin_coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = std::exp(sigma * std::log(eigenvalue(static_cast<int>(i) + 1)));
    a[i] *= w;
    b[i] *= w;
  }
  return x;
}

/// e^{-At}: mode k multiplied by e^{-gamma_k t}.
inline SpectralField apply_semigroup(SpectralField x, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("apply_semigroup: t must be >= 0");
  auto a = x.cos_coeffs();
  auto b = x.sin_coeffs();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::exp(-eigenvalue(static_cast<int>(i) + 1) * t);
    a[i] *= d;
    b[i] *= d;
  }
  return x;
}

/// Zeroes every mode above m and returns a field with cutoff m.
inline SpectralField truncate_modes(const SpectralField& x, int m) {
  if (m < 1 || m > x.modes()) throw std::invalid_argument("truncate_modes: need 1 <= m <= x.modes()");
  SpectralField y(m);
  for (int k = 1; k <= m; ++k) {
    y.cos_at(k) = x.cos_at(k);
    y.sin_at(k) = x.sin_at(k);
  }
  return y;
}

/// Embeds x into a larger cutoff with zero upper modes.
inline SpectralField extend_modes(const SpectralField& x, int m) {
  if (m < x.modes()) throw std::invalid_argument("extend_modes: target cutoff smaller than field");
  SpectralField y(m);
  for (int k = 1; k <= x.modes(); ++k) {
    y.cos_at(k) = x.cos_at(k);
    y.sin_at(k) = x.sin_at(k);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Grid representation.

struct GridField {
  std::vector<double> v;  // values at xi_j = j / n_g
  int size() const { return static_cast<int>(v.size()); }
};

/// Smallest n >= lo of the form 2^a 3^b 5^c (fast FFTW sizes).
inline int smooth_fft_size(int lo) {
  for (int n = std::max(lo, 1);; ++n) {
    int r = n;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return n;
  }
}

/// Grid size that evaluates cubic products of m-mode fields without
/// aliasing into the retained modes (n_g >= 4m + 1).
inline int dealiased_grid_size(int m) { return smooth_fft_size(4 * m + 1); }
inline int min_cubic_grid(int m) { return 4 * m + 1; }

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace detail

/// Owns FFTW r2c/c2r plans and aligned buffers for one grid size. Plans are
/// built with FFTW_ESTIMATE, which keeps the arithmetic identical from run
/// to run.
class FourierGrid {
 public:
  explicit FourierGrid(int n) : n_(n), nc_(n / 2 + 1) {
    if (n < 3) throw std::invalid_argument("FourierGrid: grid size must be >= 3");
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n_)));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(nc_)));
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n_, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n_, spec_, real_, FFTW_ESTIMATE);
  }
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;
  ~FourierGrid() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int size() const { return n_; }

  /// Evaluates x on the grid; writes n values into `out`.
  void synthesize(const SpectralField& x, std::span<double> out) {
    const int m = x.modes();
    if (n_ < 2 * m + 1) throw std::invalid_argument("to_grid: grid size must be >= 2m+1");
    std::memset(spec_, 0, sizeof(fftw_complex) * static_cast<std::size_t>(nc_));
    constexpr double kInvSqrt2 = 1.0 / kSqrt2;
    for (int k = 1; k <= m; ++k) {
      spec_[k][0] = x.cos_at(k) * kInvSqrt2;
      spec_[k][1] = -x.sin_at(k) * kInvSqrt2;
    }
    fftw_execute(backward_);
    std::copy(real_, real_ + n_, out.begin());
  }

  /// Projects grid values onto the first m real modes (mean discarded).
  void analyze(std::span<const double> in, SpectralField& x) {
    const int m = x.modes();
    if (n_ < 2 * m + 1) throw std::invalid_argument("from_grid: grid size must be >= 2m+1");
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
    const double scale = kSqrt2 / static_cast<double>(n_);
    for (int k = 1; k <= m; ++k) {
      x.cos_at(k) = spec_[k][0] * scale;
      x.sin_at(k) = -spec_[k][1] * scale;
    }
  }

 private:
  int n_;
  int nc_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Per-thread cache of transforms keyed by grid size.
inline FourierGrid& fourier_grid(int n) {
  thread_local std::map<int, std::unique_ptr<FourierGrid>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FourierGrid>(n);
  return *slot;
}

inline GridField to_grid(const SpectralField& x, int n_g) {
  if (n_g < 2 * x.modes() + 1) throw std::invalid_argument("to_grid: grid size must be >= 2m+1");
  GridField g{std::vector<double>(static_cast<std::size_t>(n_g))};
  fourier_grid(n_g).synthesize(x, g.v);
  return g;
}

inline SpectralField from_grid(const GridField& g, int m) {
  if (m < 1) throw std::invalid_argument("from_grid: m must be >= 1");
  if (g.size() < 2 * m + 1) throw std::invalid_argument("from_grid: grid size must be >= 2m+1");
  SpectralField x(m);
  fourier_grid(g.size()).analyze(g.v, x);
  return x;
}

// ---------------------------------------------------------------------------
// Serialization. CSV rows "k,a_k,b_k" (header line "k,a_k,b_k"), or a binary
// record of little-endian f64 triples (k, a_k, b_k), one per mode.

inline void write_field_csv(std::ostream& os, const SpectralField& x) {
  os << "k,a_k,b_k\n";
  os << std::setprecision(17);
  for (int k = 1; k <= x.modes(); ++k) os << k << ',' << x.cos_at(k) << ',' << x.sin_at(k) << '\n';
}

inline SpectralField read_field_csv(std::istream& is) {
  std::string line;
  std::vector<double> a, b;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("k,", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string tk, ta, tb;
    if (!std::getline(row, tk, ',') || !std::getline(row, ta, ',') || !std::getline(row, tb, ','))
      throw std::runtime_error("read_field_csv: malformed row '" + line + "'");
    const int k = std::stoi(tk);
    if (k != static_cast<int>(a.size()) + 1) throw std::runtime_error("read_field_csv: modes must be listed 1..m in order");
    a.push_back(std::stod(ta));
    b.push_back(std::stod(tb));
  }
  return SpectralField(std::move(a), std::move(b));
}

namespace detail {

inline void put_le_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  os.write(bytes, 8);
}

inline bool get_le_f64(std::istream& is, double& v) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  std::memcpy(&v, &u, sizeof v);
  return true;
}

}  // namespace detail

inline void write_field_binary(std::ostream& os, const SpectralField& x) {
  for (int k = 1; k <= x.modes(); ++k) {
    detail::put_le_f64(os, static_cast<double>(k));
    detail::put_le_f64(os, x.cos_at(k));
    detail::put_le_f64(os, x.sin_at(k));
  }
}

inline SpectralField read_field_binary(std::istream& is) {
  std::vector<double> a, b;
  double k = 0, ak = 0, bk = 0;
  while (detail::get_le_f64(is, k)) {
    if (!detail::get_le_f64(is, ak) || !detail::get_le_f64(is, bk))
      throw std::runtime_error("read_field_binary: truncated record");
    if (static_cast<int>(k) != static_cast<int>(a.size()) + 1)
      throw std::runtime_error("read_field_binary: modes must be stored 1..m in order");
    a.push_back(ak);
    b.push_back(bk);
  }
  return SpectralField(std::move(a), std::move(b));
}

}  // namespace glstable
