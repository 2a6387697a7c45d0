#include "qlab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "qlab/continuation.hpp"
#include "qlab/entry_exit.hpp"
#include "qlab/equilibria.hpp"
#include "qlab/error.hpp"
#include "qlab/output.hpp"
#include "qlab/plots.hpp"
#include "qlab/quartic.hpp"
#include "qlab/simulate.hpp"

namespace qlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Ctx {
  RunConfig cfg;
  fs::path dir;
  std::vector<std::string> artifacts;
  fs::path file(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }
};

SimulationOptions sim_options(const RunConfig& c) {
  SimulationOptions o = c.simulate.sim;
  o.rtol = c.rtol;
  o.atol = c.atol;
  return o;
}

double local_max_fold_p2(const QuarticSpec& q) {
  for (const auto& f : fold_points(q))
    if (f.kind == FoldKind::local_max) return f.p2;
  return 0.0;
}

void cmd_simulate(Ctx& x) {
  const ModelParams& m = x.cfg.model;
  const SimulateBlock& s = x.cfg.simulate;
  if (s.full_model) {
    FullState init = rest_state(m);
    init.p2 = m.epsilon;
    if (!s.init_full.empty()) init = {s.init_full[0], s.init_full[1], s.init_full[2],
                                      s.init_full[3], s.init_full[4], s.init_full[5]};
    const Trajectory tr = simulate_full(m, init, sim_options(x.cfg));
    write_trajectory(x.file("trajectory.csv"), tr);
    write_events(x.file("events.csv"), tr);
    json ranges;
    const char* names[] = {"p1", "p2", "d", "f", "g_syn", "v"};
    for (int k = 0; k < 6; ++k) {
      double lo = 1e300, hi = -1e300;
      for (const auto& st : tr.states) {
        lo = std::min(lo, st[k]);
        hi = std::max(hi, st[k]);
      }
      ranges[names[k]] = {lo, hi};
    }
    write_json(x.file("summary.json"), {{"model", "full"}, {"timescale", "slow"}, {"ranges", ranges},
                                        {"steps", tr.times.size()}, {"events", tr.events.size()}});
    return;
  }
  SlowFastState init = s.init;
  if (init.p2 < 0.0) init = {-m.b / m.a, m.epsilon};
  const Trajectory tr = simulate_core(m, init, sim_options(x.cfg));
  const Classification cls = classify_asymptotics(m, tr, s.classify);
  write_trajectory(x.file("trajectory.csv"), tr);
  write_events(x.file("events.csv"), tr);
  json j = classification_json(cls);
  j["local_max_fold_p2"] = local_max_fold_p2(m.quartic);
  if (cls.kind == AsymptoticKind::limit_cycle) {
    const SlowPassage sp = slow_passage_fractions(m, tr, cls);
    j["slow_fraction_lower"] = sp.lower;
    j["slow_fraction_upper"] = sp.upper;
    j["lower_branch_only"] = cls.amplitude < local_max_fold_p2(m.quartic);
  }
  j["initial_state"] = {init.p1, init.p2};
  write_json(x.file("classification.json"), j);
}

std::vector<double> entry_grid(const RunConfig& c) {
  if (!c.entry_exit.p10.empty()) return c.entry_exit.p10;
  const double lo = -c.model.b_tilde / c.model.a_tilde + c.entry_exit.margin;
  const double hi = gamma_eval(c.model.quartic, 0.0) - c.entry_exit.margin;
  const int n = c.entry_exit.samples;
  if (!(hi > lo)) throw Error(ErrorKind::EntryOutOfRange, "entry interval is empty after the margin");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1));
  return g;
}

void cmd_entry_exit(Ctx& x) {
  const ModelParams& m = x.cfg.model;
  const EntryExitBlock& e = x.cfg.entry_exit;
  EntryExitOptions eo;
  eo.p11_max = e.p11_max;
  SimulatedExitOptions so;
  so.rtol = x.cfg.rtol;
  so.atol = x.cfg.atol;
  const double delta = e.delta > 0.0 ? e.delta : m.epsilon;
  CsvWriter w(x.file("entry_exit.csv"), {"p10", "p11_closed_form", "p11_quadrature", "closed_vs_quadrature",
                                         "p11_simulated", "simulated_vs_closed", "upper_branch_accessible",
                                         "status"});
  const double nan = std::nan("");
  for (double p10 : entry_grid(x.cfg)) {
    double cf = nan, qd = nan, sim = nan;
    std::string acc, status = "ok";
    try {
      cf = exit_point(m, p10, ExitMethod::closed_form, eo).p11;
      qd = exit_point(m, p10, ExitMethod::quadrature, eo).p11;
      acc = upper_branch_accessible(m, p10, eo) ? "true" : "false";
      if (e.simulate) sim = simulated_exit(m, p10, delta, so).p11;
    } catch (const Error& err) {
      status = std::string(to_string(err.kind()));
    }
    w << p10 << cf << qd << std::abs(cf - qd) << sim << sim - cf << acc << status;
    w.end_row();
  }
}

void cmd_folds(Ctx& x) {
  const QuarticSpec& q = x.cfg.model.quartic;
  CsvWriter w(x.file("folds.csv"), {"kind", "p2", "p1"});
  for (const auto& f : fold_points(q)) {
    w << std::string(to_string(f.kind)) << f.p2 << f.p1;
    w.end_row();
  }
  const TcPoint tc = tc_point(q, x.cfg.model.a_tilde, x.cfg.model.b_tilde);
  w << std::string("transcritical") << tc.p2 << tc.p1;
  w.end_row();
  const auto z = gamma_zeros(q);
  write_json(x.file("quartic.json"), {{"zeros", z}, {"coefficients", q.coefficients()}, {"tc_valid", tc.valid}});
}

void cmd_equilibria(Ctx& x) {
  CsvWriter w(x.file("equilibria.csv"),
              {"label", "p1", "p2", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "classification"});
  for (const auto& e : find_equilibria(x.cfg.model)) {
    w << std::string(to_string(e.label)) << e.location.p1 << e.location.p2 << e.eigenvalues[0].real()
      << e.eigenvalues[0].imag() << e.eigenvalues[1].real() << e.eigenvalues[1].imag()
      << std::string(to_string(e.classification));
    w.end_row();
  }
}

Branch eq_branch(Ctx& x) {
  const ContinueBlock& c = x.cfg.cont;
  Branch eq = equilibrium_branch(x.cfg.model, c.alpha_lo, c.alpha_hi, c.samples);
  write_branch(x.file("branch_eq.csv"), eq);
  return eq;
}

void cmd_continue_eq(Ctx& x) {
  const Branch eq = eq_branch(x);
  write_markers(x.file("markers.csv"), eq.hopf, {});
}

json topology_json(const TopologyReport& t) {
  json conn = json::array();
  for (const auto& [a, b] : t.connected) conn.push_back({a, b});
  return {{"connected", conn},
          {"toward_small_alpha", t.toward_small_alpha},
          {"inconclusive", t.inconclusive},
          {"summary", t.summary()}};
}

json cmd_continue_lc(Ctx& x) {
  const Branch eq = eq_branch(x);
  const std::vector<Branch> cycles = lc_branches(x.cfg.model, eq.hopf, x.cfg.cont.lc);
  for (const auto& br : cycles) write_branch(x.file("branch_lc_" + br.origin + ".csv"), br);
  write_markers(x.file("markers.csv"), eq.hopf, cycles);
  const TopologyReport topo = branch_topology(eq.hopf, cycles, x.cfg.cont.lc);
  json hopf = json::array();
  for (const auto& h : eq.hopf)
    hopf.push_back({{"label", h.label}, {"alpha", h.alpha}, {"p1", h.location.p1}, {"frequency", h.frequency}});
  json branches = json::array();
  for (const auto& br : cycles) branches.push_back(branch_json(br));
  json j = {{"r1", x.cfg.model.quartic.r[0]}, {"hopf", hopf}, {"branches", branches}, {"topology", topology_json(topo)}};
  write_json(x.file("topology.json"), j);
  return j;
}

void write_manifest(Ctx& x, const std::string& command) {
  std::vector<std::string> arts = x.artifacts;
  std::sort(arts.begin(), arts.end());
  arts.erase(std::unique(arts.begin(), arts.end()), arts.end());
  write_json(x.dir / "manifest.json", manifest_json(x.cfg, command, arts));
}

std::string r1_dir(double r1) {
  char b[32];
  std::snprintf(b, sizeof b, "r1_%g", r1);
  return b;
}

// Diagram data, one subdirectory per r1 when a sweep is configured.
void diagram(Ctx& x, const std::string& command) {
  if (x.cfg.cont.r1_sweep.empty()) {
    cmd_continue_lc(x);
    write_manifest(x, command);
    for (const auto& f : emit_plots(x.dir)) x.artifacts.push_back(f);
    return;
  }
  json sweep = json::array();
  std::vector<std::string> summaries;
  for (double r1 : x.cfg.cont.r1_sweep) {
    Ctx sub{x.cfg, x.dir / r1_dir(r1), {}};
    sub.cfg.model.quartic.r[0] = r1;
    sub.cfg.cont.r1_sweep.clear();
    fs::create_directories(sub.dir);
    json j = cmd_continue_lc(sub);
    write_manifest(sub, command);
    emit_plots(sub.dir);
    summaries.push_back(j["topology"]["summary"]);
    sweep.push_back({{"r1", r1}, {"directory", r1_dir(r1)}, {"topology", j["topology"]}});
  }
  json changes = json::array();
  for (std::size_t i = 1; i < summaries.size(); ++i)
    if (summaries[i] != summaries[i - 1]) changes.push_back({x.cfg.cont.r1_sweep[i - 1], x.cfg.cont.r1_sweep[i]});
  write_json(x.file("sweep.json"), {{"sweep", sweep}, {"topology_changes", changes}});
  write_manifest(x, command);
}

void dispatch(Ctx& x, const std::string& command, const std::string& arg) {
  if (command == "simulate") cmd_simulate(x);
  else if (command == "entry-exit") cmd_entry_exit(x);
  else if (command == "folds") cmd_folds(x);
  else if (command == "equilibria") cmd_equilibria(x);
  else if (command == "continue-eq") cmd_continue_eq(x);
  else if (command == "continue-lc") {
    diagram(x, command);
    return;
  } else if (command == "plot") {
    x.artifacts = emit_plots(x.dir);
    return;
  } else if (command == "scenario") {
    if (arg == "fig3" || arg == "fig4" || arg == "fig5" || arg == "fig6") {
      cmd_simulate(x);
      write_manifest(x, "scenario " + arg);
      for (const auto& f : emit_plots(x.dir)) x.artifacts.push_back(f);
      return;
    }
    if (arg == "fig7" || arg == "fig9" || arg == "fig11") {
      diagram(x, "scenario " + arg);
      return;
    }
    throw Error(ErrorKind::ConfigError, "unknown scenario " + arg);
  } else {
    throw Error(ErrorKind::ConfigError, "unknown command " + command);
  }
  write_manifest(x, command);
}

}  // namespace

RunOutcome run(const RunConfig& cfg, const std::string& command, const std::string& arg) {
  Ctx x{cfg, fs::path(cfg.output_dir), {}};
  RunOutcome out;
  try {
    fs::create_directories(x.dir);
    dispatch(x, command, arg);
    out.artifacts = x.artifacts;
    out.message = "ok";
  } catch (const Error& e) {
    out.exit_code = e.kind() == ErrorKind::ConfigError ? 2 : 3;
    out.message = std::string(to_string(e.kind())) + ": " + e.what();
    std::error_code ec;
    fs::create_directories(x.dir, ec);
    write_json(x.dir / "error.json",
               {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}, {"command", command},
                {"exit_code", out.exit_code}});
  } catch (const std::exception& e) {
    out.exit_code = 3;
    out.message = std::string("internal: ") + e.what();
    std::error_code ec;
    fs::create_directories(x.dir, ec);
    write_json(x.dir / "error.json",
               {{"kind", "internal"}, {"message", e.what()}, {"command", command}, {"exit_code", 3}});
  }
  return out;
}

}  // namespace qlab
