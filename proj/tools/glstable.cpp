// glstable: command-line runner for the experiments in include/glstable.
//
//   glstable <command> [--config file.json] [--out dir] [flags...]
//   glstable run --config file.json
//   glstable replay <manifest.txt> --out dir
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glstable/experiment.hpp"

namespace {

using glstable::cli::ConfigError;
using glstable::cli::json;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, beta, c0, dt, n, n_mc, theta, p, eps;
  std::optional<int> m;
  std::string T;
  std::vector<std::string> sets;
};

void add_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON config file");
  app.add_option("--out", o.out, "output directory (overrides output_dir)");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--alpha", o.alpha, "stability index");
  app.add_option("--beta", o.beta, "noise regularity");
  app.add_option("--c0", o.c0, "noise amplitude");
  app.add_option("--m", o.m, "mode cutoff");
  app.add_option("--dt", o.dt, "time step");
  app.add_option("--T", o.T, "horizon: number, list a,b,c or doubling range a..b");
  app.add_option("--n-mc", o.n_mc, "Monte Carlo paths");
  app.add_option("--n", o.n, "sample count");
  app.add_option("--theta", o.theta, "fractional power");
  app.add_option("--p", o.p, "moment order");
  app.add_option("--eps", o.eps, "small-ball radius");
  app.add_option("--set", o.sets, "dotted.key=JSON value (repeatable)");
}

json& at_path(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad key path '" + dotted + "'");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[key];
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

/// Key receiving --n for each command.
std::string n_key(const std::string& command) {
  if (command == "inequalities") return "experiment.n_samples";
  if (command == "calibrate") return "experiment.n_pilot";
  if (command == "galerkin") return "experiment.n_seeds";
  return "experiment.n";
}

json build_config(const std::string& command, const Overrides& o) {
  json j = json::object();
  if (!o.config.empty()) {
    try {
      j = json::parse(glstable::io::read_file(o.config));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("cannot parse config: ") + e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  if (!command.empty()) {
    if (j.contains("command") && j["command"] != command)
      throw ConfigError("config command '" + j["command"].get<std::string>() + "' differs from '" + command + "'");
    j["command"] = command;
  }
  if (!j.contains("command")) throw ConfigError("no command given");
  const std::string cmd = j["command"].get<std::string>();
  if (!o.out.empty()) j["output_dir"] = o.out;
  if (o.seed) j["seed"] = *o.seed;
  if (o.alpha) at_path(j, "noise.alpha") = *o.alpha;
  if (o.beta) at_path(j, "noise.beta") = *o.beta;
  if (o.c0) at_path(j, "noise.c0") = *o.c0;
  if (o.m) at_path(j, "noise.m") = *o.m;
  if (o.dt) at_path(j, "sim.dt") = *o.dt;
  if (o.n_mc) at_path(j, "experiment.n_mc") = static_cast<std::uint64_t>(*o.n_mc);
  if (o.n) at_path(j, n_key(cmd)) = static_cast<std::uint64_t>(*o.n);
  if (o.theta) at_path(j, "experiment.theta") = *o.theta;
  if (o.p) at_path(j, "experiment.p") = *o.p;
  if (o.eps) at_path(j, "experiment.eps") = *o.eps;
  if (!o.T.empty()) {
    const auto list = glstable::cli::parse_number_list(o.T);
    if (cmd == "conv-scan" || cmd == "moments") {
      at_path(j, "experiment.T_list") = list;
    } else {
      if (list.size() != 1) throw ConfigError("--T takes a single value for " + cmd);
      if (cmd == "accessibility" || cmd == "ergodicity" || cmd == "return-probe") at_path(j, "experiment.T") = list[0];
      else if (cmd == "picard-check") at_path(j, "experiment.T0") = list[0];
      else if (cmd == "ou-check") at_path(j, "experiment.t") = list[0];
      else at_path(j, "sim.T") = list[0];
    }
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    try {
      at_path(j, s.substr(0, eq)) = json::parse(s.substr(eq + 1));
    } catch (const json::exception&) {
      throw ConfigError("--set value for '" + s.substr(0, eq) + "' is not valid JSON");
    }
  }
  return j;
}

void print_report(const glstable::cli::RunResult& r, const std::filesystem::path& dir) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  std::cout << r.command << ": " << (r.pass() ? "PASS" : "FAIL") << " (outputs in " << dir.string() << ")\n";
}

int run_config(const json& j) {
  const auto cfg = glstable::cli::parse_config(j);
  const auto result = glstable::cli::run(cfg);
  const std::filesystem::path dir = cfg.output_dir;
  glstable::cli::write_run(cfg, result, dir);
  print_report(result, dir);
  return result.pass() ? 0 : 1;
}

int replay(const std::string& manifest_path, const std::string& out) {
  glstable::io::Manifest m;
  try {
    m = glstable::io::Manifest::parse(glstable::io::read_file(manifest_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  json j = json::parse(m.config_json);
  const std::filesystem::path src = std::filesystem::path(manifest_path).parent_path();
  const std::filesystem::path dst = out.empty() ? src / "replay" : std::filesystem::path(out);
  if (std::filesystem::weakly_canonical(dst) == std::filesystem::weakly_canonical(src))
    throw ConfigError("replay output directory must differ from the original run");
  j["output_dir"] = dst.string();
  const auto cfg = glstable::cli::parse_config(j);
  const auto result = glstable::cli::run(cfg);
  glstable::cli::write_run(cfg, result, dst);
  bool same = true;
  for (const auto& f : m.files) {
    if (f.size() < 4 || f.substr(f.size() - 4) != ".csv") continue;
    const bool eq = glstable::io::read_file(src / f) == glstable::io::read_file(dst / f);
    std::cout << (eq ? "identical " : "DIFFERS   ") << f << "\n";
    same = same && eq;
  }
  std::cout << "replay: " << (same ? "PASS" : "FAIL") << "\n";
  return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cubic reaction-diffusion on the circle with cylindrical stable forcing: experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(glstable::io::kVersion));

  std::vector<std::pair<CLI::App*, std::string>> subs;
  Overrides o;
  for (const auto& name : glstable::cli::command_names()) {
    auto* sub = app.add_subcommand(name, glstable::cli::claim_of(name));
    add_flags(*sub, o);
    subs.emplace_back(sub, name);
  }
  auto* run_cmd = app.add_subcommand("run", "run the command named in a config file");
  add_flags(*run_cmd, o);
  std::string manifest, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "rerun from a manifest and compare CSV bytes");
  replay_cmd->add_option("manifest", manifest, "manifest.txt of an earlier run")->required();
  replay_cmd->add_option("--out", replay_out, "output directory for the rerun");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*replay_cmd) return replay(manifest, replay_out);
    std::string command;
    for (const auto& [sub, name] : subs)
      if (*sub) command = name;
    return run_config(build_config(command, o));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
