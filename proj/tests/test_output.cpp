#include <filesystem>
#include <fstream>
#include <cstdio>
#include <sstream>

#include "doctest.h"
#include "qlab/error.hpp"
#include "qlab/output.hpp"
#include "qlab/plots.hpp"
#include "qlab/runner.hpp"

using namespace qlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("output") {

TEST_CASE("numbers keep 17 significant digits and round-trip") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-2.3) == "-2.2999999999999998");
  for (double x : {M_PI, 1.0 / 3.0, -1e10 / 7.0, 6.02214076e23, 1e-300}) {
    char ref[64];
    std::snprintf(ref, sizeof ref, "%.17g", x);
    CHECK(std::stod(format_number(x)) == x);
    CHECK(std::stod(format_number(x)) == std::stod(ref));
  }
}

TEST_CASE("csv writer checks row width and reader parses back") {
  const fs::path f = "out_test/table.csv";
  {
    CsvWriter w(f, {"a", "b"});
    w << 1.5 << std::string("x");
    w.end_row();
    w << 2.0 << std::string("y");
    w.end_row();
  }
  {
    CsvWriter bad("out_test/bad.csv", {"a", "b"});
    bad << 1.0;
    CHECK_THROWS_AS(bad.end_row(), Error);
    bad << 2.0;
  }
  const CsvTable t = read_csv(f);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "y");
  CHECK(t.column("b") == 1);
  CHECK(t.column("c") == -1);
  CHECK(slurp(f).back() == '\n');
}

TEST_CASE("missing artifacts") {
  try {
    read_csv("does/not/exist.csv");
    FAIL("expected MissingArtifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
  }
  fs::create_directories("out_test/empty");
  try {
    emit_plots("out_test/empty");
    FAIL("expected MissingArtifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
  }
}

TEST_CASE("phase plane carries the quartic and the axis; plots are deterministic") {
  RunConfig cfg = preset_config("fig3");
  cfg.simulate.sim.t_end = 800.0;
  cfg.output_dir = "out_test/fig3";
  REQUIRE(run(cfg, "scenario", "fig3").exit_code == 0);
  const std::string a = slurp("out_test/fig3/phase_plane.svg");
  CHECK(count(a, "class=\"quartic\"") >= 2);  // solid and dashed pieces
  CHECK(count(a, "class=\"axis\"") == 2);
  CHECK(count(a, "class=\"trajectory\"") == 1);
  CHECK(a.find("stroke-dasharray") != std::string::npos);
  emit_plots("out_test/fig3");
  CHECK(slurp("out_test/fig3/phase_plane.svg") == a);
  CHECK(fs::exists("out_test/fig3/time_series.svg"));
}

TEST_CASE("bifurcation diagram shows three Hopf markers for r1 = 6.4") {
  RunConfig cfg = preset_config("fig7");
  cfg.output_dir = "out_test/eq64";
  REQUIRE(run(cfg, "continue-eq").exit_code == 0);
  REQUIRE(run(cfg, "plot").exit_code == 0);
  const std::string svg = slurp("out_test/eq64/bifurcation.svg");
  CHECK(count(svg, "class=\"hopf\"") == 3);
  CHECK(count(svg, "class=\"equilibrium\"") >= 2);
  const CsvTable m = read_csv("out_test/eq64/markers.csv");
  CHECK(m.rows.size() == 3);
}

TEST_CASE("branch csv columns") {
  Branch br;
  br.points.resize(1);
  br.points[0].alpha = 0.5;
  br.points[0].period = 12.0;
  br.points[0].n_segments = 40;
  write_branch("out_test/branch.csv", br);
  const CsvTable t = read_csv("out_test/branch.csv");
  const std::vector<std::string> lead(t.header.begin(), t.header.begin() + 6);
  CHECK(lead == std::vector<std::string>{"alpha", "p1_max", "p1_min", "period", "stability", "n_segments"});
  CHECK(t.rows[0][3] == "12");
  CHECK(t.rows[0][5] == "40");
}

}
