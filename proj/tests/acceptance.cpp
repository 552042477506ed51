// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Artifacts of each run land in ./acceptance_out/<name>; the lines are also
// written to ./acceptance_out/report.txt.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <sys/wait.h>

#include "glstable/experiment.hpp"

using namespace glstable;
using glstable::cli::json;
namespace fs = std::filesystem;

namespace {

const fs::path kOut = "acceptance_out";

// Tolerances and sizes.
constexpr double kCfTol = 0.01;
constexpr std::size_t kCfDraws = 1000000;
constexpr double kKsLevel = 0.01;
constexpr double kLSlopeTol = 0.1;
constexpr double kZSlopeTol = 0.15;
constexpr std::size_t kScanPaths = 2000;
constexpr std::size_t kAccessPaths = 10000;
constexpr std::size_t kInequalitySamples = 10000;
constexpr double kScalingTol = 0.05;
constexpr double kPicardRatio = 0.5;
constexpr double kPicardAgreement = 10.0;
constexpr std::size_t kEnergyPaths = 100;
constexpr double kGalerkinReduction = 2.0;
constexpr double kGalerkinMonotone = 0.9;
constexpr std::size_t kGalerkinSeeds = 100;
constexpr std::size_t kMomentPaths = 500;
constexpr double kMomentR2 = 0.95;
constexpr std::size_t kErgodicPaths = 500;
constexpr double kNullPassMin = 0.95;
constexpr double kSpreadMax = 10.0;
constexpr double kLinearityMax = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return io::fmt(v); }

cli::RunResult run_command(json j, const std::string& name) {
  j["output_dir"] = (kOut / name).string();
  const auto cfg = cli::parse_config(j);
  const auto r = cli::run(cfg);
  cli::write_run(cfg, r, kOut / name);
  return r;
}

std::string failed_checks(const cli::RunResult& r) {
  std::string s;
  for (const auto& c : r.checks)
    if (!c.pass) s += (s.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
  return s;
}

Outcome c1_stable_cf() {
  std::string detail;
  bool ok = true;
  for (double alpha : {1.6, 1.8}) {
    json j = {{"command", "noise-check"},
              {"seed", 101},
              {"noise", {{"alpha", alpha}}},
              {"experiment", {{"n", kCfDraws}, {"lambdas", {0.5, 1.0, 2.0}}, {"tol", kCfTol}}}};
    const auto r = run_command(j, "c1_alpha" + num(alpha));
    const double err = r.results["max_cf_error"];
    ok = ok && err < kCfTol;
    detail += (detail.empty() ? "" : ", ") + std::string("alpha ") + num(alpha) + ": max error " + num(err);
  }
  return {ok, detail};
}

Outcome c2_ou_exact() {
  json j = {{"command", "ou-check"}, {"seed", 102}, {"experiment", {{"n", 2000}, {"h_euler", 1e-4}, {"level", kKsLevel}}}};
  const auto r = run_command(j, "c2");
  double pmin = 1.0;
  for (const auto& t : r.results["tests"]) pmin = std::min(pmin, t["p_value"].get<double>());
  return {r.pass() && r.checks.size() == 4, "4 (gamma, alpha) pairs, smallest p = " + num(pmin)};
}

Outcome c3_scan() {
  json j = {{"command", "conv-scan"},
            {"seed", 103},
            {"noise", {{"alpha", 1.8}}},
            {"experiment",
             {{"theta", 0.0}, {"p", 1.0}, {"T_list", {0.0625, 0.125, 0.25, 0.5, 1.0}}, {"n_mc", kScanPaths},
              {"process", "both"}, {"z_tol", kZSlopeTol}, {"l_tol", kLSlopeTol}}}};
  const auto r = run_command(j, "c3");
  const auto& z = r.results["Z"];
  const auto& l = r.results["L"];
  const bool ok = r.pass() && !z["degenerate"].get<bool>() && !l["degenerate"].get<bool>();
  return {ok, "L slope " + num(l["slope"]) + " (target " + num(1 / 1.8) + " +- " + num(kLSlopeTol) + "), Z slope " +
                  num(z["slope"]) + " (bound " + num(1 / 1.8 + kZSlopeTol) + ")"};
}

Outcome c4_accessibility() {
  json j = {{"command", "accessibility"}, {"seed", 104}, {"experiment", {{"n_mc", kAccessPaths}, {"eps", 0.5}}}};
  const auto r = run_command(j, "c4");
  const double lo = r.results["wilson_lo"];
  return {lo > 0.0, "c0 = " + num(r.results["c0"]) + ", estimate " + num(r.results["estimate"]) + ", Wilson lower " +
                        num(lo)};
}

Outcome c5_inequalities() {
  json j = {{"command", "inequalities"},
            {"seed", 105},
            {"experiment", {{"n_samples", kInequalitySamples}, {"slope_tol", kScalingTol}}}};
  const auto r = run_command(j, "c5");
  return {r.pass(), r.pass() ? "zero violations, cubic slopes within " + num(kScalingTol) : failed_checks(r)};
}

Outcome c6_picard() {
  json j = {{"command", "picard-check"},
            {"seed", 106},
            {"experiment", {{"target_ratio", kPicardRatio}, {"agreement_factor", kPicardAgreement}}}};
  const auto r = run_command(j, "c6");
  if (!r.pass()) return {false, failed_checks(r)};
  return {true, "ratio " + num(r.results["max_ratio"]) + " at T = " + num(r.results["T"]) + ", distance " +
                    num(r.results["agreement_distance"]) + " vs Richardson " + num(r.results["richardson_estimate"])};
}

Outcome c7_energy() {
  NoiseSpec spec;
  SimConfig cfg;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < kEnergyPaths; ++i) {
    SimConfig c = cfg;
    c.seed = derive_seed(107, i);
    ZPath zp;
    const auto tr = solve_trajectory(SpectralField(spec.m), spec, c, &zp);
    const auto rep = energy_bound_check(tr, zp, calibration::kEnergyC);
    bad += rep.ok ? 0 : 1;
  }
  std::size_t det_bad = 0;
  for (double amp : {0.5, 2.0, 8.0}) {
    const auto tr = solve_trajectory(SpectralField::cosine_mode(spec.m, 1, amp), spec.with_c0(0.0), cfg);
    det_bad += energy_bound_check(tr, 0.0).ok ? 0 : 1;
  }
  return {bad == 0 && det_bad == 0, std::to_string(bad) + " of " + std::to_string(kEnergyPaths) +
                                        " random paths and " + std::to_string(det_bad) +
                                        " of 3 deterministic runs violate"};
}

Outcome c8_galerkin() {
  json j = {{"command", "galerkin"},
            {"seed", 108},
            {"experiment",
             {{"m_list", {8, 16, 32, 64}}, {"m_ref", 256}, {"n_seeds", kGalerkinSeeds},
              {"monotone_min", kGalerkinMonotone}, {"reduction", kGalerkinReduction}}}};
  const auto r = run_command(j, "c8");
  return {r.pass(), "median error " + num(r.results["median_err_max_m"]) + " at m=64 vs " +
                        num(r.results["median_err_min_m"]) + " at m=8, monotone fraction " +
                        num(r.results["monotone_fraction"])};
}

Outcome c9_moments() {
  json j = {{"command", "moments"},
            {"seed", 109},
            {"experiment", {{"T_list", {1.0, 2.0, 4.0, 8.0}}, {"n_mc", kMomentPaths}, {"r2_min", kMomentR2}}}};
  const auto r = run_command(j, "c9");
  const auto& f = r.results["fit"];
  const bool ok = f["b"].get<double>() >= 0.0 && f["c"].get<double>() >= 0.0 && f["r2"].get<double>() > kMomentR2;
  return {ok, "b = " + num(f["b"]) + ", c = " + num(f["c"]) + ", R^2 = " + num(f["r2"])};
}

Outcome c10_uniqueness() {
  json j = {{"command", "ergodicity"},
            {"seed", 110},
            {"experiment",
             {{"x2_normH", 5.0}, {"T", 20.0}, {"burn_in", 10.0}, {"n_mc", kErgodicPaths}, {"level", kKsLevel},
              {"null_pass_min", kNullPassMin}}}};
  NoiseSpec spec;
  if (!spec.ergodic_window()) return {false, "default noise lies outside the uniqueness window"};
  const auto r = run_command(j, "c10");
  const auto& ks = r.results["ks"][0];
  const auto& nul = r.results["null"];
  return {r.pass(), "D = " + num(ks["D"]) + ", p = " + num(ks["p_value"]) + "; null passes " +
                        std::to_string(nul["passes"].get<std::size_t>()) + " of " +
                        std::to_string(nul["repetitions"].get<std::size_t>())};
}

Outcome c11_continuity() {
  json j = {{"command", "continuity"},
            {"seed", 111},
            {"experiment",
             {{"delta_list", {1e-2, 1e-3, 1e-4}}, {"t_list", {0.01, 0.02, 0.05}}, {"spread_max", kSpreadMax},
              {"linearity_max", kLinearityMax}}}};
  const auto r = run_command(j, "c11");
  return {r.pass(), "spread of R t^{1/2} " + num(r.results["rate_spread"]) + ", linearity " +
                        num(r.results["linearity_spread"])};
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome c12_determinism() {
  const std::string cli = GLSTABLE_CLI_PATH;
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"simulate", "simulate --seed 112 --T 0.5 --set sim.checkpoint_stride=50"},
      {"conv-scan", "conv-scan --seed 112 --n-mc 200 --T 0.25..1"},
      {"galerkin", "galerkin --seed 112 --n 3 --T 0.2 --set experiment.m_list=[8,16] --set experiment.m_ref=64"},
      {"continuity", "continuity --seed 112 --n-mc 4"},
      {"ergodicity", "ergodicity --seed 112 --n-mc 20 --T 1 --set experiment.burn_in=0.5 "
                     "--set experiment.null_repetitions=0"},
  };
  std::size_t same = 0;
  std::string bad;
  for (const auto& [name, args] : runs) {
    const fs::path dir = kOut / ("c12_" + name);
    fs::remove_all(dir);
    const int rc = shell("\"" + cli + "\" " + args + " --out \"" + dir.string() + "\"");
    const int rr = shell("\"" + cli + "\" replay \"" + (dir / "manifest.txt").string() + "\" --out \"" +
                         (dir / "replay").string() + "\"");
    bool ok = rc != 2 && rr == 0 && fs::exists(dir / "manifest.txt");
    if (ok) {
      const auto m = io::Manifest::parse(io::read_file(dir / "manifest.txt"));
      std::size_t csv = 0;
      for (const auto& f : m.files)
        if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") {
          ++csv;
          ok = ok && io::read_file(dir / f) == io::read_file(dir / "replay" / f);
        }
      ok = ok && csv > 0;
    }
    if (ok) ++same;
    else bad += " " + name;
  }
  return {same == runs.size(),
          std::to_string(same) + " of " + std::to_string(runs.size()) + " commands replay byte-identical" +
              (bad.empty() ? "" : "; differing:" + bad)};
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all = {
      {1, "stable sampler characteristic function", 60, c1_stable_cf},
      {2, "exact OU step vs Euler oracle", 300, c2_ou_exact},
      {3, "maximal-inequality scan", 600, c3_scan},
      {4, "accessibility", 600, c4_accessibility},
      {5, "nonlinearity inequality suite", 120, c5_inequalities},
      {6, "Picard contraction and solver agreement", 120, c6_picard},
      {7, "energy estimate", 300, c7_energy},
      {8, "Galerkin convergence", 1800, c8_galerkin},
      {9, "moment growth", 1800, c9_moments},
      {10, "uniqueness probe", 3600, c10_uniqueness},
      {11, "continuity probe", 600, c11_continuity},
      {12, "determinism", 600, c12_determinism},
  };
  std::ofstream report(kOut / "report.txt");
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    report << line << std::endl;
  };
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    char time_s[64];
    std::snprintf(time_s, sizeof time_s, "%.1f s of %.0f s", secs, c.budget_s);
    emit("criterion " + std::to_string(c.id) + " " + (pass ? "PASS" : "FAIL") + " [" + c.name + "] " + o.detail +
         " (" + time_s + (in_time ? "" : ", over budget") + ")");
  }
  emit(failures == 0 ? "all criteria PASS" : std::to_string(failures) + " criteria FAIL");
  return failures == 0 ? 0 : 1;
}
