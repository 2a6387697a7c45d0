#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qlab/output.hpp"
#include "qlab/runner.hpp"

using namespace qlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

int cli(const std::string& args) {
  const int rc = std::system((std::string(QLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("folds for r1 = 5") {
  RunConfig cfg = preset_config("fig6");
  cfg.output_dir = "out_run/folds5";
  REQUIRE(run(cfg, "folds").exit_code == 0);
  const CsvTable t = read_csv("out_run/folds5/folds.csv");
  REQUIRE(t.rows.size() == 4);
  CHECK(std::stod(t.rows[0][1]) == doctest::Approx(0.24875).epsilon(1e-5));
  CHECK(std::stod(t.rows[1][1]) == doctest::Approx(0.976512).epsilon(1e-6));
  CHECK(std::stod(t.rows[2][1]) == doctest::Approx(1.52474).epsilon(1e-5));
  const json m = read_json("out_run/folds5/manifest.json");
  CHECK(m["command"] == "folds");
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK(m["tolerances"]["T_max"] == 1e4);
  CHECK(parse_config(m["config"]).model.quartic.r[0] == 5.0);
}

TEST_CASE("simulate from rest without stimulus stays put") {
  RunConfig cfg = preset_config("fig3");
  cfg.model.stimulus.V = 0.0;
  cfg.simulate.init = {-cfg.model.b / cfg.model.a, 0.0};
  cfg.simulate.sim.t_end = 200.0;
  cfg.output_dir = "out_run/rest";
  REQUIRE(run(cfg, "simulate").exit_code == 0);
  const CsvTable t = read_csv("out_run/rest/trajectory.csv");
  for (const auto& row : t.rows) {
    CHECK(std::stod(row[1]) == doctest::Approx(-2.3));
    CHECK(std::stod(row[2]) == 0.0);
  }
  CHECK(read_json("out_run/rest/classification.json")["kind"] == "equilibrium");
}

TEST_CASE("scenario fig3 classification and repeatable csv bytes") {
  RunConfig cfg = preset_config("fig3");
  cfg.output_dir = "out_run/fig3a";
  REQUIRE(run(cfg, "scenario", "fig3").exit_code == 0);
  const json c = read_json("out_run/fig3a/classification.json");
  CHECK(c["kind"] == "limit_cycle");
  CHECK(c["transient_loops"] == 2);
  cfg.output_dir = "out_run/fig3b";
  REQUIRE(run(cfg, "scenario", "fig3").exit_code == 0);
  for (const char* f : {"trajectory.csv", "events.csv", "phase_plane.svg"})
    CHECK(slurp(fs::path("out_run/fig3a") / f) == slurp(fs::path("out_run/fig3b") / f));
}

TEST_CASE("full model simulation writes the tail columns") {
  RunConfig cfg = preset_config("fig3");
  cfg.simulate.full_model = true;
  cfg.simulate.sim.t_end = 5.0;
  cfg.output_dir = "out_run/full";
  REQUIRE(run(cfg, "simulate").exit_code == 0);
  const CsvTable t = read_csv("out_run/full/trajectory.csv");
  CHECK(t.header == std::vector<std::string>{"t", "p1", "p2", "d", "f", "g_syn", "v"});
}

TEST_CASE("entry-exit table cross-checks methods") {
  RunConfig cfg = preset_config("fig3");
  cfg.entry_exit.p10 = {-1.0, -0.3};
  cfg.output_dir = "out_run/ee";
  REQUIRE(run(cfg, "entry-exit").exit_code == 0);
  const CsvTable t = read_csv("out_run/ee/entry_exit.csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(std::stod(t.rows[0][1]) == doctest::Approx(2.4234688823));
  CHECK(std::stod(t.rows[0][3]) < 1e-8);
  CHECK(t.rows[0][6] == "true");
  CHECK(t.rows[1][6] == "false");
  CHECK(t.rows[1][7] == "ok");
}

TEST_CASE("equilibria table") {
  RunConfig cfg = preset_config("fig3");
  cfg.output_dir = "out_run/eqs";
  REQUIRE(run(cfg, "equilibria").exit_code == 0);
  const CsvTable t = read_csv("out_run/eqs/equilibria.csv");
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "S");
  CHECK(t.rows[0][7] == "stable");
}

TEST_CASE("errors produce a record and exit codes") {
  RunConfig cfg = preset_config("fig3");
  cfg.output_dir = "out_run/err";
  RunOutcome r = run(cfg, "scenario", "fig99");
  CHECK(r.exit_code == 2);
  CHECK(read_json("out_run/err/error.json")["kind"] == "ConfigError");
  cfg.entry_exit.margin = 5.0;  // empty entry interval
  r = run(cfg, "entry-exit");
  CHECK(r.exit_code == 3);
  CHECK(read_json("out_run/err/error.json")["kind"] == "EntryOutOfRange");
  cfg.output_dir = "out_run/noplot";
  r = run(cfg, "plot");
  CHECK(r.exit_code == 3);
  CHECK(read_json("out_run/noplot/error.json")["kind"] == "MissingArtifact");
}

TEST_CASE("command line exit codes") {
  CHECK(cli("--preset fig6 --out out_run/cli_folds folds") == 0);
  CHECK(fs::exists("out_run/cli_folds/folds.csv"));
  CHECK(cli("--config /nonexistent.json folds") == 2);
  std::ofstream("out_run/bad.json") << R"({"model": {"epsilon": 0.02}})";
  CHECK(cli("--config out_run/bad.json folds") == 2);
  CHECK(cli("--tol -1 folds") == 2);
  CHECK(cli("--preset fig99 folds") == 2);
  CHECK(cli("--out out_run/cli_noplot plot") == 3);
  CHECK(cli("--config " + std::string(QLAB_SOURCE_DIR) + "/presets/fig6.json --out out_run/cli_eq equilibria") == 0);
}

}
