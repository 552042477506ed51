#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "glstable/experiment.hpp"

using namespace glstable;
using glstable::cli::ConfigError;
using glstable::cli::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("glstable_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + GLSTABLE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("csv quoting round trips") {
  io::CsvWriter w({"a", "b"});
  w.row({"x,y", "say \"hi\""});
  CHECK(w.str() == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  const auto line = w.str().substr(4, w.str().size() - 5);
  CHECK(io::csv_split(line) == std::vector<std::string>{"x,y", "say \"hi\""});
  CHECK_THROWS_AS(w.row({"only one"}), std::logic_error);
  CHECK(io::fmt(0.1) == "0.1");
  CHECK(io::fmt(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("manifest round trip and tamper detection") {
  io::Manifest m;
  m.command = "simulate";
  m.seed = 42;
  m.config_json = R"({"command":"simulate"})";
  m.files = {"trajectory.csv", "summary.json"};
  const auto back = io::Manifest::parse(m.str());
  CHECK(back.command == "simulate");
  CHECK(back.seed == 42);
  CHECK(back.files == m.files);
  CHECK(back.config_hash() == m.config_hash());
  auto text = m.str();
  text.replace(text.find("simulate\"}"), 8, "simulatX");
  CHECK_THROWS_AS(io::Manifest::parse(text), std::invalid_argument);
  CHECK_THROWS_AS(io::Manifest::parse("hello\n"), std::invalid_argument);
}

TEST_CASE("config parsing") {
  const auto c = cli::parse_config(json::parse(R"({"command":"simulate","seed":7,"noise":{"m":16},"sim":{"T":0.1}})"));
  CHECK(c.seed == 7);
  CHECK(c.sim.m == 16);
  CHECK(c.sim.seed == 7);
  CHECK(c.sim.T == 0.1);
  CHECK(c.experiment.contains("energy_C"));
  CHECK(cli::parse_config(c.to_json()).to_json() == c.to_json());

  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"simulate","bogus":1})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"simulate","noise":{"gamma":1}})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"simulate","experiment":{"x":1}})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"moments","experiment":{"n_mc":"ten"}})")),
                  ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"fly"})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"seed":1})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json::parse(R"({"command":"simulate","sim":{"drift":"up"}})")), ConfigError);
  CHECK(std::isinf(cli::parse_config(json::parse(R"({"command":"simulate","sim":{"rho":"inf"}})")).sim.rho));

  for (const auto& name : cli::command_names()) {
    CHECK_FALSE(cli::claim_of(name).empty());
    CHECK_NOTHROW(cli::parse_config(json{{"command", name}}));
  }
}

TEST_CASE("number lists") {
  CHECK(cli::parse_number_list("0.25..2") == std::vector<double>{0.25, 0.5, 1.0, 2.0});
  CHECK(cli::parse_number_list("1,3,5") == std::vector<double>{1, 3, 5});
  CHECK(cli::parse_number_list("7") == std::vector<double>{7});
  CHECK_THROWS_AS(cli::parse_number_list("2..1"), ConfigError);
  CHECK_THROWS_AS(cli::parse_number_list("a,b"), ConfigError);
}

TEST_CASE("invalid parameters are configuration errors") {
  auto j = json::parse(R"({"command":"simulate","noise":{"alpha":2.5}})");
  CHECK_THROWS_AS(cli::run(cli::parse_config(j)), ConfigError);
  j = json::parse(R"({"command":"simulate","sim":{"T":0.1,"dt":0.03}})");
  CHECK_THROWS_AS(cli::run(cli::parse_config(j)), ConfigError);
}

TEST_CASE("in-process run writes artifacts") {
  const auto dir = scratch("inproc");
  auto c = cli::parse_config(json::parse(R"({"command":"simulate","noise":{"m":16},"sim":{"T":0.05,"checkpoint_stride":10}})"));
  const auto r = cli::run(c);
  CHECK(r.pass());
  const auto m = cli::write_run(c, r, dir);
  for (const auto& f : m.files) CHECK(fs::exists(dir / f));
  CHECK(fs::exists(dir / "manifest.txt"));
  const auto summary = json::parse(io::read_file(dir / "summary.json"));
  CHECK(summary["pass"] == true);
  CHECK(summary["command"] == "simulate");
  CHECK(summary["config_hash"] == m.config_hash());
  fs::remove_all(dir);
}

TEST_CASE("command-line runs, exit codes and replay") {
  const auto dir = scratch("cli");
  const auto out = (dir / "run").string();
  CHECK(run_cli("simulate --m 16 --T 0.05 --seed 3 --set sim.checkpoint_stride=10 --out \"" + out + "\"") == 0);
  CHECK(fs::exists(dir / "run" / "trajectory.csv"));
  CHECK(fs::exists(dir / "run" / "checkpoints.csv"));

  CHECK(run_cli("replay \"" + (dir / "run" / "manifest.txt").string() + "\" --out \"" + (dir / "again").string() +
                "\"") == 0);
  for (const char* f : {"trajectory.csv", "final_field.csv", "checkpoints.csv"})
    CHECK(io::read_file(dir / "run" / f) == io::read_file(dir / "again" / f));

  CHECK(run_cli("simulate --alpha 2.5 --out \"" + out + "\"") == 2);
  CHECK(run_cli("simulate --set noise.bogus=1 --out \"" + out + "\"") == 2);
  CHECK(run_cli("simulate --set sim.T=notjson --out \"" + out + "\"") == 2);
  CHECK(run_cli("nosuchcommand") == 2);
  CHECK(run_cli("simulate --config \"" + (dir / "missing.json").string() + "\"") == 2);

  io::write_file(dir / "cfg.json", R"({"command":"inequalities","experiment":{"n_samples":200,"n_scaled":8}})");
  CHECK(run_cli("run --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "ineq").string() + "\"") == 0);
  CHECK(json::parse(io::read_file(dir / "ineq" / "summary.json"))["command"] == "inequalities");
  fs::remove_all(dir);
}
