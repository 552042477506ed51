#pragma once

// Experiment runner behind the command-line tool. A run is described by a
// JSON config:
//   {
//     "command": "simulate",
//     "seed": 1,
//     "output_dir": "out",
//     "noise": {"alpha": 1.8, "beta": 0.85, "c0": 1, "m": 64},
//     "sim": {"dt": 0.001, "T": 1, "n_g": 0, "rho": "inf", "adapt_threshold": 50,
//             "max_halvings": 12, "drift": "gl", "checkpoint_stride": 0},
//     "experiment": { command-specific keys, see experiment_defaults }
//   }
// Missing keys take defaults, unknown keys are rejected. A run returns its
// artifacts in memory; write_run stores them with summary.json and
// manifest.txt.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "glstable/calibration.hpp"
#include "glstable/ergodicity_lab.hpp"
#include "glstable/galerkin.hpp"
#include "glstable/gl_dynamics.hpp"
#include "glstable/inequalities.hpp"
#include "glstable/io.hpp"
#include "glstable/ou_convolution.hpp"
#include "glstable/stable_noise.hpp"
#include "glstable/stats.hpp"

namespace glstable::cli {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "noise-check", "ou-check", "conv-scan", "accessibility", "simulate",   "picard-check", "inequalities", "calibrate",
      "galerkin",    "moments",   "ergodicity",    "continuity", "return-probe"};
  return names;
}

/// Statement each command tests, embedded in its summary.
inline std::string claim_of(const std::string& command) {
  static const std::map<std::string, std::string> claims = {
      {"noise-check", "E exp(i lambda z) = exp(-|lambda|^alpha) for the standard symmetric alpha-stable law"},
      {"ou-check", "z_k(t+h) = e^{-gamma h} z_k(t) + beta_k ((1 - e^{-alpha gamma h}) / (alpha gamma))^{1/alpha} xi "
                   "is the exact transition law of dz = -gamma z dt + beta_k dl"},
      {"conv-scan", "E sup_{t<=T} ||A^theta Z_t||_H^p <= C T^{p/alpha} for 0 <= theta < beta - 1/(2 alpha), "
                    "0 < p < alpha; equality in order for the noise L itself"},
      {"accessibility", "P(sup_{t<=T} ||A^theta Z_t||_H <= eps) > 0 for 0 <= theta < beta - 1/(2 alpha)"},
      {"simulate", "the mild solution X = Y + Z exists with sup_{t<=T} ||X_t||_V finite and "
                   "||Y_t||^2 <= e^{-(2 pi - 3) t} ||x||^2 + int_0^t e^{-(2 pi - 3)(t-s)} "
                   "(||Z_s||^2 + C ||Z_s||_V^4) ds"},
      {"picard-check", "(F u)_t = e^{-At} x - int_0^t e^{-A(t-s)} N(u_s + Z_s) ds satisfies "
                       "d(Fu, Fv) <= 1/2 d(u, v) in sup_t t^{1/6} ||A^{1/6}(u_t - v_t)|| for small T"},
      {"inequalities", "<x, -N(x)> <= 1/4; ||N(x)||_V <= C(||x||_V + ||x||_V^3); "
                       "||N(x) - N(y)|| <= C(1 + ||A^{1/4}x||^2 + ||A^{1/4}y||^2) ||x - y||; "
                       "||N(x) - N(y)|| <= C(1 + ||A^s x||^2 + ||A^s y||^2) ||A^s (x - y)|| (s >= 1/6); "
                       "||N(x)|| <= C(1 + ||A^s x||^3); "
                       "<-N(u+v), u> <= 3/2 ||u||^2 + 1/2 ||v||^2 + C ||v||_V^4"},
      {"calibrate", "largest pilot ratio of each bound times the safety factor reproduces the frozen constants"},
      {"galerkin", "||X^m_t - X_t||_W -> 0 as m -> infinity for W in {H, V}"},
      {"moments", "E sup_{t<=T} (||X_t||^2 + 1)^{1/2} + E int_0^T ||X_s||_V^2 / (||X_s||^2 + 1)^{1/2} ds "
                  "<= (||x||^2 + 1)^{1/2} + C T + C T^{1/2}"},
      {"ergodicity", "the invariant measure is unique for 3/2 < alpha < 2 and "
                     "1/2 + 1/(2 alpha) < beta < 3/2 - 1/alpha"},
      {"continuity", "||X^x_t - X^y_t||_V <= C t^{-1/2} ||x - y||_H on common noise"},
      {"return-probe", "on {sup_{t<=T} ||Z_t||_V <= eps}, ||X_t||_H <= e^{-(pi - 3/2) t} R + C (eps^4 + eps^2 + eps), "
                       "hence P(X_T in B_H(delta)) > 0"},
  };
  const auto it = claims.find(command);
  if (it == claims.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

inline json zero_start() { return {{"type", "zero"}, {"k", 1}, {"amplitude", 0.0}, {"path", ""}}; }

/// Command-specific keys and defaults.
inline json experiment_defaults(const std::string& command) {
  if (command == "noise-check") return {{"n", 1000000}, {"lambdas", {0.5, 1.0, 2.0}}, {"tol", 0.01}};
  if (command == "ou-check")
    return {{"gammas", {4.0 * std::numbers::pi * std::numbers::pi, 16.0 * std::numbers::pi * std::numbers::pi}},
            {"beta_k", 1.0}, {"alphas", {1.6, 1.8}}, {"t", 1.0}, {"n", 2000}, {"h_euler", 1e-4}, {"level", 0.01}};
  if (command == "conv-scan")
    return {{"theta", 0.0},       {"p", 1.0},        {"T_list", {0.0625, 0.125, 0.25, 0.5, 1.0}},
            {"n_mc", 2000},       {"steps_per_T", 128}, {"process", "both"},
            {"z_tol", 0.15},      {"l_tol", 0.1}};
  if (command == "accessibility")
    return {{"theta", 0.5},          {"eps", 0.5},           {"eps_list", {0.25, 0.5}}, {"T", 1.0},
            {"n_mc", 10000},         {"n_steps", 256},       {"calibrate_c0", true},    {"target_mean_sup", 1.0},
            {"n_pilot", 1000}};
  if (command == "simulate") return {{"x0", zero_start()}, {"energy_C", calibration::kEnergyC}};
  if (command == "picard-check")
    return {{"amplitude", 10.0}, {"T0", 0.512}, {"h", 0.001},         {"n_iter", 200},
            {"target_ratio", 0.5}, {"agreement_factor", 10.0}};
  if (command == "inequalities") return {{"n_samples", 10000}, {"n_scaled", 64}, {"rho", 1.0}, {"slope_tol", 0.05}};
  if (command == "calibrate")
    return {{"n_pilot", calibration::kPilotSamples}, {"safety", calibration::kSafety}};
  if (command == "galerkin")
    return {{"m_list", {8, 16, 32, 64}}, {"m_ref", 256}, {"n_seeds", 100}, {"x0", zero_start()},
            {"monotone_min", 0.9},        {"reduction", 2.0}};
  if (command == "moments")
    return {{"T_list", {1.0, 2.0, 4.0, 8.0}}, {"n_mc", 500}, {"r2_min", 0.95}, {"ratio_lo", 1.5}, {"ratio_hi", 2.5},
            {"x0", zero_start()}};
  if (command == "ergodicity")
    return {{"x2_normH", 5.0},       {"T", 20.0},         {"burn_in", 10.0},   {"n_mc", 500},
            {"observables", {"normH"}}, {"level", 0.01},  {"null_repetitions", 100}, {"null_n_mc", 100},
            {"null_T", 0.1},         {"null_pass_min", 0.95}};
  if (command == "continuity")
    return {{"delta_list", {1e-2, 1e-3, 1e-4}}, {"t_list", {0.01, 0.02, 0.05}}, {"n_mc", 20},
            {"x0", zero_start()},               {"spread_max", 10.0},          {"linearity_max", 2.0},
            {"directions", "modes"}};
  if (command == "return-probe")
    return {{"R", 5.0},      {"eps", 0.5},         {"delta", 1.0},           {"T", 5.0},
            {"n_mc", 1000},  {"calibrate_c0", false}, {"target_acceptance", 0.05}, {"n_pilot", 400}};
  throw ConfigError("unknown command '" + command + "'");
}

// ---------------------------------------------------------------------------
// Parsing.

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  NoiseSpec noise;
  SimConfig sim;
  json experiment;

  /// Fully resolved config (defaults filled), keys sorted.
  json to_json() const {
    json sim_j = {{"dt", sim.dt},
                  {"T", sim.T},
                  {"n_g", sim.n_g},
                  {"rho", std::isinf(sim.rho) ? json("inf") : json(sim.rho)},
                  {"adapt_threshold", sim.adapt_threshold},
                  {"max_halvings", sim.max_halvings},
                  {"drift", sim.drift == Drift::kGinzburgLandau ? "gl" : (sim.drift == Drift::kZero ? "zero" : "linear")},
                  {"checkpoint_stride", sim.checkpoint_stride}};
    return {{"command", command},
            {"seed", seed},
            {"output_dir", output_dir},
            {"noise", {{"alpha", noise.alpha}, {"beta", noise.beta}, {"c0", noise.c0}, {"m", noise.m}}},
            {"sim", sim_j},
            {"experiment", experiment}};
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

inline double get_rho(const json& j) {
  if (j.is_null()) return kInf;
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ConfigError("sim.rho must be a number or \"inf\"");
  }
  if (!j.is_number()) throw ConfigError("sim.rho must be a number or \"inf\"");
  return j.get<double>();
}

/// Fills defaults into `user` (recursively for objects) and rejects keys
/// absent from `defaults`.
inline json merge_defaults(const json& defaults, const json& user, const std::string& where) {
  if (user.is_null()) return defaults;
  if (!user.is_object()) throw ConfigError(where + " must be a JSON object");
  json out = defaults;
  for (const auto& [k, v] : user.items()) {
    if (!defaults.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
    if (defaults[k].is_object()) {
      out[k] = merge_defaults(defaults[k], v, where + "." + k);
    } else {
      if (defaults[k].is_number() != v.is_number() || defaults[k].is_boolean() != v.is_boolean() ||
          defaults[k].is_string() != v.is_string() || defaults[k].is_array() != v.is_array())
        throw ConfigError("type mismatch for '" + k + "' in " + where);
      out[k] = v;
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  detail::check_keys(j, {"command", "seed", "output_dir", "noise", "sim", "experiment"}, "config");
  ExperimentConfig c;
  if (!j.contains("command")) throw ConfigError("config has no 'command'");
  c.command = detail::get_as<std::string>(j, "command", "config");
  (void)claim_of(c.command);
  if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j, "seed", "config");
  if (j.contains("output_dir")) c.output_dir = detail::get_as<std::string>(j, "output_dir", "config");
  if (j.contains("noise")) {
    const json& n = j["noise"];
    detail::check_keys(n, {"alpha", "beta", "c0", "m"}, "noise");
    if (n.contains("alpha")) c.noise.alpha = detail::get_as<double>(n, "alpha", "noise");
    if (n.contains("beta")) c.noise.beta = detail::get_as<double>(n, "beta", "noise");
    if (n.contains("c0")) c.noise.c0 = detail::get_as<double>(n, "c0", "noise");
    if (n.contains("m")) c.noise.m = detail::get_as<int>(n, "m", "noise");
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    detail::check_keys(s, {"dt", "T", "n_g", "rho", "adapt_threshold", "max_halvings", "drift", "checkpoint_stride"},
                       "sim");
    if (s.contains("dt")) c.sim.dt = detail::get_as<double>(s, "dt", "sim");
    if (s.contains("T")) c.sim.T = detail::get_as<double>(s, "T", "sim");
    if (s.contains("n_g")) c.sim.n_g = detail::get_as<int>(s, "n_g", "sim");
    if (s.contains("rho")) c.sim.rho = detail::get_rho(s["rho"]);
    if (s.contains("adapt_threshold")) c.sim.adapt_threshold = detail::get_as<double>(s, "adapt_threshold", "sim");
    if (s.contains("max_halvings")) c.sim.max_halvings = detail::get_as<int>(s, "max_halvings", "sim");
    if (s.contains("checkpoint_stride"))
      c.sim.checkpoint_stride = detail::get_as<std::size_t>(s, "checkpoint_stride", "sim");
    if (s.contains("drift")) {
      const auto d = detail::get_as<std::string>(s, "drift", "sim");
      if (d == "gl") c.sim.drift = Drift::kGinzburgLandau;
      else if (d == "zero") c.sim.drift = Drift::kZero;
      else if (d == "linear") c.sim.drift = Drift::kLinear;
      else throw ConfigError("sim.drift must be \"gl\", \"zero\" or \"linear\"");
    }
  }
  c.sim.m = c.noise.m;
  c.sim.seed = c.seed;
  c.experiment = detail::merge_defaults(experiment_defaults(c.command),
                                        j.contains("experiment") ? j["experiment"] : json(nullptr), "experiment");
  return c;
}

/// Parses "a..b" (doubling ladder from a to b), "a,b,c" or a single number.
inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  try {
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
      const double a = std::stod(s.substr(0, dots)), b = std::stod(s.substr(dots + 2));
      if (!(a > 0.0 && b >= a)) throw ConfigError("range '" + s + "' needs 0 < a <= b");
      for (double t = a; t <= b * (1.0 + 1e-12); t *= 2.0) out.push_back(t);
      return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError("cannot parse number list '" + s + "'");
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

// ---------------------------------------------------------------------------
// Results.

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct RunResult {
  std::string command;
  std::vector<Check> checks;
  json results = json::object();
  std::vector<std::pair<std::string, std::string>> files;  // name, content (CSV)
  std::vector<std::string> warnings;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  void check(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
};

namespace detail {

inline std::string num(double v) { return io::fmt(v); }

inline SpectralField start_field(const json& x0, int m) {
  detail::check_keys(x0, {"type", "k", "amplitude", "path"}, "experiment.x0");
  const auto type = x0.value("type", std::string("zero"));
  if (type == "zero") return SpectralField(m);
  if (type == "mode") {
    const int k = x0.value("k", 1);
    if (k < 1 || k > m) throw ConfigError("experiment.x0.k must lie in [1, m]");
    return SpectralField::cosine_mode(m, k, x0.value("amplitude", 0.0));
  }
  if (type == "file") {
    std::istringstream is(io::read_file(x0.value("path", std::string())));
    SpectralField f = read_field_csv(is);
    if (f.modes() > m) throw ConfigError("experiment.x0 file has more modes than noise.m");
    return extend_modes(f, m);
  }
  throw ConfigError("experiment.x0.type must be \"zero\", \"mode\" or \"file\"");
}

inline std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

inline void validate_noise(const ExperimentConfig& c) {
  try {
    c.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline void validate_sim(const SimConfig& s) {
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands.

inline RunResult run_noise_check(const ExperimentConfig& c) {
  const json& e = c.experiment;
  const double alpha = c.noise.alpha;
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("noise.alpha must lie in (0, 2] for noise-check");
  const auto n = e["n"].get<std::size_t>();
  const auto lambdas = detail::doubles(e["lambdas"]);
  const double tol = e["tol"].get<double>();
  if (n == 0) throw ConfigError("experiment.n must be >= 1");
  RngStream rng(c.seed, stream_id(StreamTag::kScalar, 0));
  std::vector<double> z(n);
  for (auto& v : z) v = sample_standard_stable(alpha, rng);
  RunResult r;
  io::CsvWriter w({"lambda", "empirical_re", "empirical_im", "exact", "abs_error"});
  double worst = 0.0;
  for (double l : lambdas) {
    const auto cf = stats::empirical_cf(z, l);
    const double exact = std::exp(-std::pow(std::abs(l), alpha));
    const double err = std::abs(cf - std::complex<double>(exact, 0.0));
    worst = std::max(worst, err);
    w.row({detail::num(l), detail::num(cf.real()), detail::num(cf.imag()), detail::num(exact), detail::num(err)});
  }
  const double med = stats::median(z);
  r.files.emplace_back("cf.csv", w.str());
  r.results = {{"alpha", alpha}, {"n", n}, {"max_cf_error", worst}, {"median", med}};
  r.check("characteristic function", worst < tol, "max |cf - exp(-|l|^alpha)| = " + detail::num(worst));
  r.check("symmetry", std::abs(med) < tol, "median = " + detail::num(med));
  return r;
}

inline RunResult run_ou_check(const ExperimentConfig& c) {
  const json& e = c.experiment;
  const double level = e["level"];
  RunResult r;
  io::CsvWriter w({"gamma", "beta_k", "alpha", "D", "p_value"});
  json rows = json::array();
  std::uint64_t slot = 0;
  for (double g : detail::doubles(e["gammas"]))
    for (double a : detail::doubles(e["alphas"])) {
      OUExactnessResult res;
      try {
        res = ou_exactness_check(g, e["beta_k"], a, e["t"], e["n"].get<std::size_t>(), e["h_euler"],
                                 derive_seed(c.seed, slot++));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
      }
      w.row({detail::num(g), detail::num(res.beta_k), detail::num(a), detail::num(res.ks.statistic),
             detail::num(res.ks.p_value)});
      r.check("KS gamma=" + detail::num(g) + " alpha=" + detail::num(a), res.ks.p_value >= level,
              "D = " + detail::num(res.ks.statistic) + ", p = " + detail::num(res.ks.p_value));
      rows.push_back({{"gamma", g}, {"alpha", a}, {"D", res.ks.statistic}, {"p_value", res.ks.p_value}});
    }
  r.files.emplace_back("ou_ks.csv", w.str());
  r.results = {{"tests", rows}};
  return r;
}

inline RunResult run_conv_scan(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  const double theta = e["theta"], p = e["p"];
  const auto T_list = detail::doubles(e["T_list"]);
  const auto n_mc = e["n_mc"].get<std::size_t>();
  const auto steps = e["steps_per_T"].get<std::size_t>();
  const auto process = e["process"].get<std::string>();
  if (process != "Z" && process != "L" && process != "both") throw ConfigError("experiment.process must be Z, L or both");
  try {
    check_theta_window(c.noise, theta, "conv-scan");
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (!(p > 0.0 && p < c.noise.alpha)) throw ConfigError("conv-scan: p must satisfy 0 < p < alpha");
  RunResult r;
  io::CsvWriter w({"process", "T", "estimate", "stderr"});
  const double order = p / c.noise.alpha;
  auto one = [&](ScanProcess proc, const char* name) {
    const auto res = maximal_inequality_scan(c.noise, theta, p, T_list, n_mc, c.seed, proc, steps);
    for (const auto& row : res.rows) w.row({name, detail::num(row.T), detail::num(row.estimate), detail::num(row.std_error)});
    r.results[name] = {{"slope", res.degenerate ? json(nullptr) : json(res.slope)},
                       {"slope_ci", res.degenerate ? json(nullptr) : json({res.slope_lo, res.slope_hi})},
                       {"degenerate", res.degenerate}};
    return res;
  };
  if (process != "L") {
    const auto res = one(ScanProcess::kConvolution, "Z");
    if (res.degenerate)
      r.check("Z slope", true, "degenerate (all estimates zero), slope undefined");
    else
      r.check("Z slope", res.slope <= order + e["z_tol"].get<double>(),
              "slope " + detail::num(res.slope) + " vs bound p/alpha + tol = " + detail::num(order + e["z_tol"].get<double>()));
  }
  if (process != "Z") {
    const auto res = one(ScanProcess::kNoise, "L");
    if (res.degenerate)
      r.check("L slope", true, "degenerate (all estimates zero), slope undefined");
    else
      r.check("L slope", std::abs(res.slope - order) <= e["l_tol"].get<double>(),
              "slope " + detail::num(res.slope) + " vs p/alpha = " + detail::num(order));
  }
  r.results["p_over_alpha"] = order;
  r.files.emplace_back("scan.csv", w.str());
  return r;
}

/// c0 with E sup_{t<=T} ||A^theta Z||_H = target, from a pilot at c0 = 1.
inline double calibrate_c0_mean(const NoiseSpec& spec, double theta, double T, std::size_t n_steps,
                                std::size_t n_pilot, std::uint64_t seed, double target) {
  const auto s = unit_amplitude_sup_sample(spec, theta, T, n_steps, n_pilot, derive_seed(seed, 0x9170u));
  const double m = stats::mean(s);
  if (!(m > 0.0)) throw std::runtime_error("c0 pilot: zero mean supremum");
  return target / m;
}

inline RunResult run_accessibility(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  const double theta = e["theta"], eps = e["eps"], T = e["T"];
  const auto n_mc = e["n_mc"].get<std::size_t>();
  const auto n_steps = e["n_steps"].get<std::size_t>();
  try {
    check_theta_window(c.noise, theta, "accessibility");
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  RunResult r;
  NoiseSpec spec = c.noise;
  if (e["calibrate_c0"].get<bool>()) {
    spec.c0 = calibrate_c0_mean(spec, theta, T, n_steps, e["n_pilot"].get<std::size_t>(), c.seed,
                                e["target_mean_sup"].get<double>());
  }
  auto eps_list = detail::doubles(e["eps_list"]);
  if (std::find(eps_list.begin(), eps_list.end(), eps) == eps_list.end()) eps_list.push_back(eps);
  std::sort(eps_list.begin(), eps_list.end());
  io::CsvWriter w({"eps", "successes", "n", "estimate", "wilson_lo", "wilson_hi"});
  double prev = -1.0;
  bool monotone = true;
  AccessibilityResult main;
  for (double ep : eps_list) {
    const auto a = accessibility_probe(spec, theta, ep, T, n_mc, c.seed, n_steps);
    w.row({detail::num(ep), io::fmt(static_cast<std::uint64_t>(a.successes)), io::fmt(static_cast<std::uint64_t>(a.n)),
           detail::num(a.estimate), detail::num(a.wilson_lo), detail::num(a.wilson_hi)});
    if (a.estimate < prev) monotone = false;
    prev = a.estimate;
    if (ep == eps) main = a;
  }
  r.files.emplace_back("accessibility.csv", w.str());
  r.results = {{"c0", spec.c0}, {"eps", eps}, {"estimate", main.estimate}, {"wilson_lo", main.wilson_lo},
               {"wilson_hi", main.wilson_hi}};
  r.check("positive probability", main.wilson_lo > 0.0, "Wilson lower bound " + detail::num(main.wilson_lo));
  r.check("monotone in eps", monotone, "estimates nondecreasing over eps_list on common noise");
  return r;
}

inline RunResult run_simulate(const ExperimentConfig& c) {
  detail::validate_noise(c);
  detail::validate_sim(c.sim);
  const SpectralField x0 = detail::start_field(c.experiment["x0"], c.noise.m);
  RunResult r;
  ZPath zp;
  TrajectoryRecord tr;
  try {
    tr = solve_trajectory(x0, c.noise, c.sim, &zp);
  } catch (const TrajectoryAborted& ex) {
    r.check("trajectory completed", false, ex.what());
    return r;
  }
  bool finite = true;
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    finite = finite && std::isfinite(tr.normH[i]) && std::isfinite(tr.normV[i]);
  const auto energy = energy_bound_check(tr, zp, c.experiment["energy_C"].get<double>());
  r.files.emplace_back("trajectory.csv", io::trajectory_csv(tr));
  std::ostringstream fx;
  write_field_csv(fx, tr.final_X);
  r.files.emplace_back("final_field.csv", fx.str());
  if (!tr.checkpoints.empty()) {
    io::CsvWriter w({"t", "k", "a_k", "b_k"});
    for (std::size_t i = 0; i < tr.checkpoints.size(); ++i)
      for (int k = 1; k <= tr.checkpoints[i].modes(); ++k)
        w.row({detail::num(tr.checkpoint_times[i]), io::fmt(k), detail::num(tr.checkpoints[i].cos_at(k)),
               detail::num(tr.checkpoints[i].sin_at(k))});
    r.files.emplace_back("checkpoints.csv", w.str());
  }
  const double supV = *std::max_element(tr.normV.begin(), tr.normV.end());
  r.results = {{"sup_normV", supV},
               {"final_normH", tr.normH.back()},
               {"substepped_intervals", tr.substepped_intervals},
               {"energy_worst_margin", energy.worst_margin},
               {"tau_rho", tr.tau_rho ? json(*tr.tau_rho) : json(nullptr)}};
  r.check("finite norms", finite && std::isfinite(supV), "sup ||X_t||_V = " + detail::num(supV));
  r.check("energy estimate", energy.ok,
          energy.ok ? "worst relative margin " + detail::num(energy.worst_margin)
                    : "violated first at t = " + detail::num(*energy.first_violation));
  return r;
}

inline RunResult run_picard_check(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  const double amp = e["amplitude"], T0 = e["T0"], h = e["h"];
  const int n_iter = e["n_iter"];
  SimConfig cfg = c.sim;
  cfg.m = c.noise.m;
  const SpectralField x0 = SpectralField::cosine_mode(c.noise.m, 1, amp);
  const double r0 = T0 / (0.5 * h);
  if (std::abs(r0 - std::round(r0)) > 1e-9 * r0) throw ConfigError("picard-check: T0 must be a multiple of h/2");
  const ZPath quiet = simulate_Z(c.noise.with_c0(0.0), uniform_grid(T0, static_cast<std::size_t>(std::round(r0))), c.seed);
  RunResult r;
  PicardSearch search;
  try {
    search = picard_contraction_search(x0, quiet, T0, n_iter, cfg, e["target_ratio"].get<double>());
  } catch (const std::runtime_error& ex) {
    r.check("contraction", false, ex.what());
    return r;
  }
  io::CsvWriter w({"iteration", "distance", "ratio"});
  for (std::size_t i = 0; i < search.result.distances.size(); ++i)
    w.row({io::fmt(static_cast<std::uint64_t>(i + 1)), detail::num(search.result.distances[i]),
           i == 0 ? std::string("") : detail::num(search.result.ratios[i - 1])});
  r.files.emplace_back("picard.csv", w.str());
  r.check("contraction", search.result.max_ratio <= e["target_ratio"].get<double>(),
          "T = " + detail::num(search.T) + " after " + std::to_string(search.halvings) +
              " halvings, max ratio " + detail::num(search.result.max_ratio));
  const auto agree = picard_solver_agreement(x0, c.noise, search.T, h, n_iter, cfg, c.seed);
  const double factor = e["agreement_factor"];
  r.check("fixed point converged on common noise", agree.picard.converged,
          std::to_string(agree.picard.iterations) + " iterations");
  r.check("agreement with solver", agree.distance <= factor * agree.solver_error_estimate,
          "||picard - solver|| = " + detail::num(agree.distance) + ", Richardson estimate " +
              detail::num(agree.solver_error_estimate));
  r.results = {{"T", search.T},
               {"halvings", search.halvings},
               {"max_ratio", search.result.max_ratio},
               {"agreement_distance", agree.distance},
               {"richardson_estimate", agree.solver_error_estimate}};
  return r;
}

inline RunResult run_inequalities(const ExperimentConfig& c) {
  const json& e = c.experiment;
  RunResult r;
  if (c.noise.m != calibration::kPilotModes)
    r.warnings.push_back("constants were calibrated at m = " + std::to_string(calibration::kPilotModes) +
                         "; the A^{1/4} Lipschitz constant depends on m");
  const auto rep = inequality_suite(e["n_samples"].get<std::size_t>(), c.seed, calibration::kConstants, c.noise.m,
                                    e["n_scaled"].get<std::size_t>(), e["rho"].get<double>());
  const auto& k = calibration::kConstants;
  io::CsvWriter w({"bound", "sup_ratio", "constant", "violations"});
  auto u = [](std::size_t v) { return io::fmt(static_cast<std::uint64_t>(v)); };
  w.row({"inner_product", detail::num(rep.sup.inner), "0.25", u(rep.inner_violations)});
  w.row({"N_in_V", detail::num(rep.sup.nv), detail::num(k.nv), u(rep.nv_violations)});
  w.row({"lipschitz_quarter", detail::num(rep.sup.nxy_quarter), detail::num(k.nxy_quarter), u(rep.nxy_quarter_violations)});
  w.row({"lipschitz_sixth", detail::num(rep.sup.nxy_low), detail::num(k.nxy_low), u(rep.nxy_low_violations)});
  w.row({"N_in_H", detail::num(rep.sup.nh), detail::num(k.nh), u(rep.nh_violations)});
  w.row({"mixed_inner_product", detail::num(rep.sup.nuvu), detail::num(k.nuvu), u(rep.nuvu_violations)});
  r.files.emplace_back("inequalities.csv", w.str());
  r.results = {{"n_samples", rep.n_samples},
               {"slope_V", {rep.scaling.slope_V_min, rep.scaling.slope_V_max}},
               {"slope_H", {rep.scaling.slope_H_min, rep.scaling.slope_H_max}},
               {"truncation_kills_growth", rep.scaling.truncation_kills}};
  r.check("<x,-N(x)> <= 1/4", rep.inner_violations == 0, "sup " + detail::num(rep.sup.inner));
  r.check("calibrated bounds", rep.total_violations() == 0,
          std::to_string(rep.total_violations()) + " violations (including scaled copies and N^rho)");
  r.check("cubic growth", rep.scaling_ok(e["slope_tol"].get<double>()),
          "slopes V [" + detail::num(rep.scaling.slope_V_min) + ", " + detail::num(rep.scaling.slope_V_max) + "], H [" +
              detail::num(rep.scaling.slope_H_min) + ", " + detail::num(rep.scaling.slope_H_max) + "]");
  return r;
}

inline RunResult run_calibrate(const ExperimentConfig& c) {
  const json& e = c.experiment;
  const auto n = e["n_pilot"].get<std::size_t>();
  const double safety = e["safety"];
  const auto k = calibrate_constants(n, c.noise.m, c.seed, safety);
  const auto& f = calibration::kConstants;
  RunResult r;
  io::CsvWriter w({"bound", "constant", "frozen"});
  w.row({"N_in_V", detail::num(k.nv), detail::num(f.nv)});
  w.row({"lipschitz_quarter", detail::num(k.nxy_quarter), detail::num(f.nxy_quarter)});
  w.row({"lipschitz_sixth", detail::num(k.nxy_low), detail::num(f.nxy_low)});
  w.row({"N_in_H", detail::num(k.nh), detail::num(f.nh)});
  w.row({"mixed_inner_product", detail::num(k.nuvu), detail::num(f.nuvu)});
  r.files.emplace_back("calibration.csv", w.str());
  const bool frozen_setup = n == calibration::kPilotSamples && c.noise.m == calibration::kPilotModes &&
                            c.seed == calibration::kPilotSeed && safety == calibration::kSafety;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  const bool same = close(k.nv, f.nv) && close(k.nxy_quarter, f.nxy_quarter) && close(k.nxy_low, f.nxy_low) &&
                    close(k.nh, f.nh) && close(k.nuvu, f.nuvu);
  r.results = {{"frozen_setup", frozen_setup}, {"matches_frozen", same}};
  if (frozen_setup)
    r.check("reproduces frozen constants", same, same ? "all five constants match" : "constants differ");
  else
    r.warnings.push_back("pilot settings differ from the frozen ones; constants reported, not compared");
  r.check("analytic mixed bound", k.nuvu / safety <= kMixedBoundAnalytic,
          "pilot max " + detail::num(k.nuvu / safety) + " <= 27/(256*48 pi^2) = " + detail::num(kMixedBoundAnalytic));
  return r;
}

inline RunResult run_galerkin(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  const auto m_list = e["m_list"].get<std::vector<int>>();
  const int m_ref = e["m_ref"];
  SimConfig cfg = c.sim;
  detail::validate_sim(cfg.with_modes(m_ref));
  const SpectralField x0 = detail::start_field(e["x0"], m_ref);
  ConvergenceReport rep;
  try {
    rep = galerkin_convergence_experiment(x0, c.noise, cfg, m_list, m_ref, e["n_seeds"].get<std::size_t>(), c.seed);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  RunResult r;
  io::CsvWriter w({"m", "errH", "errV", "seed"});
  for (const auto& row : rep.rows) w.row({io::fmt(row.m), detail::num(row.errH), detail::num(row.errV), io::fmt(row.seed)});
  r.files.emplace_back("galerkin.csv", w.str());
  const double lo = stats::median(rep.errors_at(rep.m_list.front()));
  const double hi = stats::median(rep.errors_at(rep.m_list.back()));
  const double frac = rep.monotone_fraction();
  r.results = {{"median_err_min_m", lo}, {"median_err_max_m", hi}, {"monotone_fraction", frac},
               {"voided", rep.voided}};
  r.check("no diverged trajectory", rep.valid(), std::to_string(rep.voided.size()) + " voided seeds");
  r.check("error reduction", hi <= lo / e["reduction"].get<double>(),
          "median error " + detail::num(hi) + " at m = " + std::to_string(rep.m_list.back()) + " vs " + detail::num(lo) +
              " at m = " + std::to_string(rep.m_list.front()));
  r.check("monotone errors", frac >= e["monotone_min"].get<double>(), "fraction " + detail::num(frac));
  return r;
}

inline RunResult run_moments(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  SimConfig cfg = c.sim;
  const auto T_list = detail::doubles(e["T_list"]);
  cfg.T = *std::max_element(T_list.begin(), T_list.end());
  detail::validate_sim(cfg);
  const SpectralField x0 = detail::start_field(e["x0"], c.noise.m);
  const auto rep = moment_growth_experiment(c.noise, cfg, T_list, e["n_mc"].get<std::size_t>(), c.seed, x0);
  RunResult r;
  io::CsvWriter w({"T", "sup_mean", "sup_median", "integral_mean", "integral_median", "lhs_mean", "lhs_median",
                   "v_integral_mean", "v_integral_median"});
  for (const auto& row : rep.rows)
    w.row({detail::num(row.T), detail::num(row.sup_mean), detail::num(row.sup_median), detail::num(row.integral_mean),
           detail::num(row.integral_median), detail::num(row.lhs_mean), detail::num(row.lhs_median),
           detail::num(row.v_integral_mean), detail::num(row.v_integral_median)});
  r.files.emplace_back("moments.csv", w.str());
  const auto& f = rep.lhs_fit;
  r.results = {{"fit", {{"a", f.a}, {"b", f.b}, {"c", f.c}, {"r2", f.r2}, {"residuals", f.residuals}}},
               {"sup_fit", {{"a", rep.sup_fit.a}, {"b", rep.sup_fit.b}, {"c", rep.sup_fit.c}, {"r2", rep.sup_fit.r2}}},
               {"v_integral_ratio", rep.v_integral_ratio},
               {"aborted", rep.aborted}};
  r.check("fit a + bT + cT^{1/2}", f.b >= 0.0 && f.c >= 0.0 && f.r2 > e["r2_min"].get<double>(),
          "b = " + detail::num(f.b) + ", c = " + detail::num(f.c) + ", R^2 = " + detail::num(f.r2));
  if (rep.rows.back().v_integral_mean > 0.0)
    r.check("near-linear growth of E int ||X||_V",
            rep.v_integral_ratio >= e["ratio_lo"].get<double>() && rep.v_integral_ratio <= e["ratio_hi"].get<double>(),
            "ratio " + detail::num(rep.v_integral_ratio));
  else
    r.check("near-linear growth of E int ||X||_V", true, "deterministic zero path, ratio not defined");
  return r;
}

inline RunResult run_ergodicity(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  SimConfig cfg = c.sim;
  cfg.T = e["T"];
  detail::validate_sim(cfg);
  std::vector<Observable> obs;
  try {
    for (const auto& name : e["observables"].get<std::vector<std::string>>()) obs.push_back(observable_by_name(name));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (obs.empty()) throw ConfigError("experiment.observables is empty");
  const double level = e["level"];
  const SpectralField x1(c.noise.m);
  const SpectralField x2 = SpectralField::cosine_mode(c.noise.m, 1, e["x2_normH"].get<double>());
  RunResult r;
  if (!c.noise.ergodic_window()) r.warnings.push_back(window_label(c.noise));
  std::vector<EnsembleRow> rows;
  const auto reps = uniqueness_probe(x1, x2, c.noise, cfg, e["n_mc"].get<std::size_t>(), c.seed, e["burn_in"], obs, &rows);
  io::CsvWriter w({"seed", "obs", "value"});
  for (const auto& row : rows) w.row({io::fmt(row.seed), row.obs, detail::num(row.value)});
  r.files.emplace_back("ensemble.csv", w.str());
  json ks = json::array();
  for (const auto& k : reps) {
    ks.push_back({{"observable", k.observable}, {"D", k.statistic}, {"p_value", k.p_value}, {"n1", k.n1},
                  {"n2", k.n2}, {"x1_normH", k.x1_normH}, {"x2_normH", k.x2_normH}, {"label", k.label}});
    if (k.in_window)
      r.check("KS " + k.observable, k.passes(level), "D = " + detail::num(k.statistic) + ", p = " + detail::num(k.p_value));
    else
      r.check("KS " + k.observable, true, "not contracted: " + k.label);
  }
  r.results["ks"] = ks;
  const auto n_null = e["null_repetitions"].get<std::size_t>();
  if (n_null > 0) {
    SimConfig nc = cfg;
    nc.T = e["null_T"];
    detail::validate_sim(nc);
    const auto nul = ks_null_repetitions(x1, c.noise, nc, e["null_n_mc"].get<std::size_t>(), n_null,
                                         derive_seed(c.seed, 0x4E11u), obs.front(), level);
    r.results["null"] = {{"repetitions", nul.repetitions}, {"passes", nul.passes}};
    r.check("same-start null", nul.pass_fraction() >= e["null_pass_min"].get<double>(),
            std::to_string(nul.passes) + " of " + std::to_string(nul.repetitions) + " repetitions pass");
  }
  return r;
}

inline RunResult run_continuity(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  const auto deltas = detail::doubles(e["delta_list"]);
  const auto ts = detail::doubles(e["t_list"]);
  const SpectralField x0 = detail::start_field(e["x0"], c.noise.m);
  const auto dir_kind = e["directions"].get<std::string>();
  if (dir_kind != "modes" && dir_kind != "random") throw ConfigError("experiment.directions must be modes or random");
  const auto dirs = dir_kind == "modes" ? mode_directions(c.noise.m)
                                        : std::vector<SpectralField>{unit_perturbation(c.noise.m, c.seed)};
  ContinuityTable tab;
  try {
    tab = pathwise_continuity_probe(x0, deltas, ts, c.noise, c.sim, e["n_mc"].get<std::size_t>(), c.seed, &dirs);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  RunResult r;
  io::CsvWriter w({"delta", "t", "R_max", "R_median"});
  for (const auto& row : tab.rows)
    w.row({detail::num(row.delta), detail::num(row.t), row.exact_zero ? "exact-zero" : detail::num(row.R_max),
           row.exact_zero ? "exact-zero" : detail::num(row.R_median)});
  r.files.emplace_back("continuity.csv", w.str());
  const double spread = tab.rate_spread(ts), lin = tab.linearity_spread();
  r.results = {{"rate_spread", spread}, {"linearity_spread", lin}, {"scaled_envelope", tab.scaled_envelope(ts)}};
  r.check("R t^{1/2} bounded", spread < e["spread_max"].get<double>(), "max/min across t = " + detail::num(spread));
  r.check("linear in delta", lin <= e["linearity_max"].get<double>(), "max ratio across deltas = " + detail::num(lin));
  return r;
}

inline RunResult run_return_probe(const ExperimentConfig& c) {
  detail::validate_noise(c);
  const json& e = c.experiment;
  SimConfig cfg = c.sim;
  cfg.T = e["T"];
  detail::validate_sim(cfg);
  const double eps = e["eps"];
  NoiseSpec spec = c.noise;
  if (e["calibrate_c0"].get<bool>()) {
    const auto s = unit_amplitude_sup_sample(spec, 0.5, cfg.T, cfg.steps(), e["n_pilot"].get<std::size_t>(),
                                             derive_seed(c.seed, 0x9170u));
    const double q = stats::quantile(s, e["target_acceptance"].get<double>());
    if (!(q > 0.0)) throw std::runtime_error("return-probe pilot: zero quantile");
    spec.c0 = eps / q;
  }
  const auto rep = small_ball_return_probe(e["R"], eps, e["delta"], spec, cfg, e["n_mc"].get<std::size_t>(), c.seed);
  RunResult r;
  io::CsvWriter w({"n", "accepted", "bound_violations", "returns", "acceptance", "return_frequency", "wilson_lo",
                   "wilson_hi", "C", "c0"});
  auto u = [](std::size_t v) { return io::fmt(static_cast<std::uint64_t>(v)); };
  w.row({u(rep.n), u(rep.accepted), u(rep.bound_violations), u(rep.returns), detail::num(rep.acceptance),
         detail::num(rep.return_frequency), detail::num(rep.wilson_lo), detail::num(rep.wilson_hi), detail::num(rep.C),
         detail::num(spec.c0)});
  r.files.emplace_back("return.csv", w.str());
  r.results = {{"c0", spec.c0}, {"acceptance", rep.acceptance}, {"return_frequency", rep.return_frequency},
               {"inconclusive", rep.inconclusive}};
  r.check("contraction bound on accepted paths", rep.bound_violations == 0,
          std::to_string(rep.bound_violations) + " of " + std::to_string(rep.accepted) + " accepted paths violate");
  if (rep.inconclusive)
    r.check("return frequency", true, "inconclusive: " + rep.note);
  else
    r.check("return frequency", rep.wilson_lo > 0.0, "Wilson lower bound " + detail::num(rep.wilson_lo));
  return r;
}

inline RunResult run(const ExperimentConfig& c) {
  RunResult r;
  const auto& cmd = c.command;
  if (cmd == "noise-check") r = run_noise_check(c);
  else if (cmd == "ou-check") r = run_ou_check(c);
  else if (cmd == "conv-scan") r = run_conv_scan(c);
  else if (cmd == "accessibility") r = run_accessibility(c);
  else if (cmd == "simulate") r = run_simulate(c);
  else if (cmd == "picard-check") r = run_picard_check(c);
  else if (cmd == "inequalities") r = run_inequalities(c);
  else if (cmd == "calibrate") r = run_calibrate(c);
  else if (cmd == "galerkin") r = run_galerkin(c);
  else if (cmd == "moments") r = run_moments(c);
  else if (cmd == "ergodicity") r = run_ergodicity(c);
  else if (cmd == "continuity") r = run_continuity(c);
  else if (cmd == "return-probe") r = run_return_probe(c);
  else throw ConfigError("unknown command '" + cmd + "'");
  r.command = cmd;
  return r;
}

inline json summary_json(const ExperimentConfig& c, const RunResult& r, const io::Manifest& m) {
  json checks = json::array();
  for (const auto& k : r.checks) checks.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
  return {{"command", c.command}, {"claim", claim_of(c.command)}, {"pass", r.pass()},
          {"checks", checks},      {"results", r.results},          {"warnings", r.warnings},
          {"seed", c.seed},        {"config_hash", m.config_hash()}, {"version", io::kVersion}};
}

/// Writes artifacts, summary.json and manifest.txt into dir; returns the manifest.
inline io::Manifest write_run(const ExperimentConfig& c, const RunResult& r, const std::filesystem::path& dir) {
  io::Manifest m;
  m.command = c.command;
  m.seed = c.seed;
  m.config_json = c.to_json().dump();
  for (const auto& [name, content] : r.files) {
    io::write_file(dir / name, content);
    m.files.push_back(name);
  }
  io::write_file(dir / "summary.json", summary_json(c, r, m).dump(2) + "\n");
  m.files.push_back("summary.json");
  io::write_file(dir / "manifest.txt", m.str());
  return m;
}

}  // namespace glstable::cli
