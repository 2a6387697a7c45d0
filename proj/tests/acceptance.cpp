// Acceptance checks 1-10. Usage: acceptance [N ...]; no argument runs all of them.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "qlab/config.hpp"
#include "qlab/continuation.hpp"
#include "qlab/entry_exit.hpp"
#include "qlab/error.hpp"
#include "qlab/integrator.hpp"
#include "qlab/output.hpp"
#include "qlab/runner.hpp"
#include "qlab/simulate.hpp"

using namespace qlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail] " << what << "; ";
    } else {
      detail << what << "; ";
    }
  }
};

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qlab_acceptance_" + name);
  fs::remove_all(d);
  return d;
}

ModelParams with_r1(double r1) {
  ModelParams p = preset_fig3();
  p.quartic.r[0] = r1;
  return p;
}

std::string fmt(double x, int digits = 6) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*g", digits, x);
  return b;
}

void c1(Verdict& v) {
  const std::map<double, std::array<double, 3>> expected = {{6.4, {0.2565, 1.00595, 1.8376}},
                                                            {5.0, {0.24875, 0.976512, 1.52474}}};
  for (const auto& [r1, want] : expected) {
    RunConfig cfg;
    cfg.model = with_r1(r1);
    cfg.output_dir = scratch_dir("c1_" + fmt(r1)).string();
    const RunOutcome r = run(cfg, "folds");
    v.require(r.exit_code == 0, "folds r1=" + fmt(r1) + " exit " + std::to_string(r.exit_code));
    const CsvTable t = read_csv(fs::path(cfg.output_dir) / "folds.csv");
    const int cp2 = t.column("p2"), ck = t.column("kind");
    std::vector<double> got;
    for (const auto& row : t.rows)
      if (row[ck] != "transcritical") got.push_back(std::stod(row[cp2]));
    bool ok = got.size() == 3;
    double worst = 0.0;
    for (std::size_t i = 0; ok && i < 3; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    ok = ok && worst <= 5e-4;
    v.require(ok, "r1=" + fmt(r1) + " folds {" + fmt(got.at(0)) + ", " + fmt(got.at(1)) + ", " + fmt(got.at(2)) +
                      "} max dev " + fmt(worst, 3));
  }
}

void c2(Verdict& v) {
  for (double r1 : {6.4, 5.0}) {
    const ModelParams p = with_r1(r1);
    const Branch eq = equilibrium_branch(p, 0.01, 2.5);
    const auto f = fold_points(p.quartic);
    bool ok = eq.hopf.size() == 3;
    double worst = 0.0;
    for (int i = 0; ok && i < 3; ++i) worst = std::max(worst, std::abs(eq.hopf[i].alpha - f[2 - i].p2));
    v.require(ok && worst <= 1e-6, "r1=" + fmt(r1) + " " + std::to_string(eq.hopf.size()) +
                                       " Hopf points, max |alpha - fold p2| " + fmt(worst, 3));
  }
}

std::vector<double> entry_grid(const ModelParams& p) {
  const double lo = -p.b_tilde / p.a_tilde + 0.05, hi = gamma_eval(p.quartic, 0.0) - 0.05;
  std::vector<double> g;
  for (int i = 0; i < 20; ++i) g.push_back(lo + (hi - lo) * i / 19.0);
  return g;
}

EntryExitOptions deep_options() {
  EntryExitOptions o;
  o.p11_max = 1e12;  // entries near U exit beyond 1e5
  return o;
}

void c3(Verdict& v) {
  const ModelParams p = preset_fig3();
  const auto grid = entry_grid(p);
  double worst_rel = 0.0;
  int far = 0, nonmono = 0;
  std::ostringstream far_list, mono_list;
  for (double p10 : grid) {
    const double cf = exit_point(p, p10, ExitMethod::closed_form, deep_options()).p11;
    const double qd = exit_point(p, p10, ExitMethod::quadrature, deep_options()).p11;
    worst_rel = std::max(worst_rel, std::abs(cf - qd) / std::max(1.0, std::abs(cf)));
    double prev = 1e300;
    std::vector<double> errs;
    for (double eps : {0.02, 0.01, 0.005}) {
      ModelParams q = p;
      q.epsilon = eps;
      SimulatedExitOptions so;
      so.p1_blowup = 1e13;
      const double sim = simulated_exit(q, p10, eps, so).p11;
      const double err = std::abs(sim - cf);
      errs.push_back(err);
      if (!(err < prev)) {
        ++nonmono;
        mono_list << " p10=" << fmt(p10, 4) << " eps=" << eps << ":" << fmt(prev, 3) << "->" << fmt(err, 3);
      }
      prev = err;
    }
    if (errs[0] > 0.1) {
      ++far;
      far_list << " p10=" << fmt(p10, 4) << ":" << fmt(errs[0], 3);
    }
  }
  v.require(worst_rel <= 1e-8, "closed form vs quadrature max rel diff " + fmt(worst_rel, 3));
  v.require(far == 0, std::to_string(far) + "/20 simulated exits (eps=0.02) off by more than 0.1" + far_list.str());
  v.require(nonmono == 0, std::to_string(nonmono) + " non-decreasing discrepancy steps over eps sweep" + mono_list.str());
}

void c4(Verdict& v) {
  const ModelParams p = preset_fig3();
  const auto grid = entry_grid(p);
  double prev = 1e300;
  int violations = 0;
  for (double p10 : grid) {
    const double x = exit_point(p, p10, ExitMethod::closed_form, deep_options()).p11;
    if (!(x < prev)) ++violations;
    prev = x;
  }
  v.require(violations == 0, "exit_point strictly decreasing over 20 entries (" + std::to_string(violations) +
                                 " violations), range [" + fmt(prev) + ", ...]");
}

nlohmann::json scenario(const std::string& name) {
  RunConfig cfg = preset_config(name);
  cfg.output_dir = scratch_dir(name).string();
  const RunOutcome r = run(cfg, "scenario", name);
  if (r.exit_code != 0) return {{"error", r.message}};
  std::ifstream in(fs::path(cfg.output_dir) / "classification.json");
  return nlohmann::json::parse(in);
}

void c5(Verdict& v) {
  auto j = scenario("fig3");
  v.require(j.value("kind", "") == "limit_cycle" && j.value("transient_loops", -1) == 2,
            "fig3 " + j.value("kind", std::string("?")) + " loops " + std::to_string(j.value("transient_loops", -1)));
  j = scenario("fig4");
  v.require(j.value("kind", "") == "equilibrium" && j.value("equilibrium", "") == "S" && j.value("transient_loops", -1) == 2,
            "fig4 " + j.value("kind", std::string("?")) + " " + j.value("equilibrium", std::string("")) + " loops " +
                std::to_string(j.value("transient_loops", -1)));
  j = scenario("fig5");
  v.require(j.value("kind", "") == "limit_cycle" && j.value("lower_branch_only", false),
            "fig5 " + j.value("kind", std::string("?")) + " lower branch only " +
                (j.contains("lower_branch_only") ? j["lower_branch_only"].dump() : std::string("n/a")));
  j = scenario("fig6");
  v.require(j.value("kind", "") == "limit_cycle" && j.value("slow_fraction_lower", 0.0) > 0.0 &&
                j.value("slow_fraction_upper", 0.0) > 0.0,
            "fig6 " + j.value("kind", std::string("?")) + " slow fractions lower " +
                fmt(j.value("slow_fraction_lower", 0.0), 3) + " upper " + fmt(j.value("slow_fraction_upper", 0.0), 3));
}

struct Diagram {
  std::vector<HopfPoint> hopf;
  std::vector<Branch> cycles;
  TopologyReport topo;
  double seconds = 0.0;
};

Diagram diagram(double r1) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams p = with_r1(r1);
  Diagram d;
  d.hopf = equilibrium_branch(p, 0.01, 2.5).hopf;
  d.cycles = lc_branches(p, d.hopf);
  d.topo = branch_topology(d.hopf, d.cycles);
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

bool has_pair(const TopologyReport& t, const std::string& a, const std::string& b) {
  return std::find(t.connected.begin(), t.connected.end(), std::make_pair(a, b)) != t.connected.end();
}

bool toward_small(const TopologyReport& t, const std::string& h) {
  return std::find(t.toward_small_alpha.begin(), t.toward_small_alpha.end(), h) != t.toward_small_alpha.end();
}

void c6(Verdict& v) {
  const Diagram d64 = diagram(6.4);
  v.require(has_pair(d64.topo, "H2", "H3") && toward_small(d64.topo, "H1"),
            "r1=6.4: " + d64.topo.summary() + " (" + fmt(d64.seconds, 3) + " s)");
  const Diagram d5 = diagram(5.0);
  v.require(has_pair(d5.topo, "H1", "H2") && toward_small(d5.topo, "H3"),
            "r1=5: " + d5.topo.summary() + " (" + fmt(d5.seconds, 3) + " s)");
  std::vector<double> sweep{6.0, 6.08, 6.15};
  std::vector<int> type;  // 0: like r1=5, 1: like r1=6.4, -1 other
  std::string line;
  for (double r1 : sweep) {
    const Diagram d = diagram(r1);
    const bool low = has_pair(d.topo, "H1", "H2") && toward_small(d.topo, "H3");
    const bool high = has_pair(d.topo, "H2", "H3") && toward_small(d.topo, "H1");
    type.push_back(low ? 0 : high ? 1 : -1);
    line += " r1=" + fmt(r1) + ": " + d.topo.summary() + " (" + fmt(d.seconds, 3) + " s);";
  }
  std::string bracket = "none";
  for (std::size_t i = 1; i < sweep.size(); ++i)
    if (type[i - 1] == 0 && type[i] == 1) bracket = "[" + fmt(sweep[i - 1]) + ", " + fmt(sweep[i]) + "]";
  v.require(type.front() == 0 && type.back() == 1, "sweep" + line + " change bracketed in " + bracket);
}

const Branch* branch_from(const Diagram& d, const std::string& origin) {
  for (const auto& b : d.cycles)
    if (b.origin == origin) return &b;
  return nullptr;
}

void c7(Verdict& v) {
  const ModelParams p = with_r1(6.4);
  const auto hopf = equilibrium_branch(p, 0.01, 2.5).hopf;
  const Branch br = lc_continue(p, lc_seed_near_hopf(p, hopf[0]), hopf);
  double best = 1e300, a_lo = 0, a_hi = 0;
  const auto& pts = br.points;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (pts[j].p1_max - pts[j].p1_min <= 1.0) continue;
    for (std::size_t i = j; i-- > 0;) {
      if (pts[i].p1_max - pts[i].p1_min < 0.05) {
        const double w = std::abs(pts[j].alpha - pts[i].alpha);
        if (w < best) {
          best = w;
          a_lo = pts[i].alpha;
          a_hi = pts[j].alpha;
        }
        break;
      }
    }
  }
  v.require(best < 1e-2, "H1 branch amplitude 0.05 -> 1.0 within delta alpha " + fmt(best, 3) + " (alpha " +
                             fmt(a_lo, 12) + " to " + fmt(a_hi, 12) + ")");
}

void check_period_growth(Verdict& v, double r1, const std::string& origin) {
  const ModelParams p = with_r1(r1);
  const auto hopf = equilibrium_branch(p, 0.01, 2.5).hopf;
  const HopfPoint* h = nullptr;
  double min_hopf = 1e300;
  for (const auto& x : hopf) {
    if (x.label == origin) h = &x;
    min_hopf = std::min(min_hopf, x.alpha);
  }
  const Branch br = lc_continue(p, lc_seed_near_hopf(p, *h), hopf);
  int n = 0, bad = 0;
  double prev = 0.0;
  bool started = false;
  for (const auto& pt : br.points) {
    if (!started && pt.alpha < min_hopf) started = true;
    if (!started) continue;
    if (n > 0 && !(*pt.period > prev)) ++bad;
    prev = *pt.period;
    ++n;
  }
  v.require(bad == 0 && n > 10, "r1=" + fmt(r1) + " " + origin + " branch below alpha " + fmt(min_hopf, 6) + ": " +
                                    std::to_string(n) + " points, " + std::to_string(bad) + " period decreases");
  v.require(br.termination == Termination::period_overflow,
            "termination " + std::string(to_string(br.termination)) + " at alpha " + fmt(br.points.back().alpha, 4) +
                " T " + fmt(*br.points.back().period));
}

void c8(Verdict& v) {
  check_period_growth(v, 6.4, "H1");
  check_period_growth(v, 5.0, "H3");
}

template <int N, class F>
double jac_error(F rhs, const double* jac, const double* y0) {
  double scale = 1.0, worst = 0.0;
  for (int k = 0; k < N * N; ++k) scale = std::max(scale, std::abs(jac[k]));
  for (int j = 0; j < N; ++j) {
    double yp[N], ym[N], fp[N], fm[N];
    std::copy(y0, y0 + N, yp);
    std::copy(y0, y0 + N, ym);
    const double h = 1e-6 * std::max(1.0, std::abs(y0[j]));
    yp[j] += h;
    ym[j] -= h;
    rhs(yp, fp);
    rhs(ym, fm);
    for (int i = 0; i < N; ++i) worst = std::max(worst, std::abs((fp[i] - fm[i]) / (2 * h) - jac[i * N + j]) / scale);
  }
  return worst;
}

void c9(Verdict& v) {
  const ModelParams p = preset_fig3();
  std::mt19937 rng(20240601);
  std::uniform_real_distribution<double> P1(-2.5, 3.0), U(-6.0, 1.0), D(0.0, 1.0), F(0.3, 1.0), G(0.0, 1.0),
      V(-60.0, -50.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    double y2[2] = {P1(rng), U(rng)}, j2[4];
    logcoords::core_jacobian(p, y2, j2, Timescale::fast);
    worst = std::max(worst, jac_error<2>([&](const double* y, double* dy) { logcoords::core_rhs(p, 0.0, y, dy, Timescale::fast); },
                                         j2, y2));
    double y6[6] = {P1(rng), U(rng), D(rng), F(rng), G(rng), V(rng)}, j6[36];
    logcoords::full_jacobian(p, y6, j6);
    worst = std::max(worst, jac_error<6>([&](const double* y, double* dy) { logcoords::full_rhs(p, 0.0, y, dy); }, j6, y6));
  }
  v.require(worst <= 1e-6, "Jacobian vs finite differences at 100 states, max rel " + fmt(worst, 3));

  int cycles = 0;
  double worst_triv = 0.0;
  {
    const ModelParams q = with_r1(5.0);
    const auto hopf = equilibrium_branch(q, 0.01, 2.5).hopf;
    for (const auto& br : lc_branches(q, hopf))
      for (const auto& pt : br.points) {
        worst_triv = std::max(worst_triv, std::abs(pt.floquet.at(0) - 1.0));
        ++cycles;
      }
  }
  v.require(worst_triv <= 1e-4, "trivial multiplier on " + std::to_string(cycles) + " cycles (r1=5, all branches), max |mu - 1| " +
                                    fmt(worst_triv, 3));

  double worst_ratio = 0.0;
  for (double tol : {1e-7, 1e-8, 1e-9}) {
    SimulationOptions a, b;
    a.t_end = b.t_end = 800.0;
    a.rtol = a.atol = tol;
    b.rtol = b.atol = tol / 2;
    const ModelParams f6 = preset_fig6();
    const auto ya = simulate_core(f6, {-f6.b / f6.a, f6.epsilon}, a).states.back();
    const auto yb = simulate_core(f6, {-f6.b / f6.a, f6.epsilon}, b).states.back();
    worst_ratio = std::max(worst_ratio, (ya - yb).cwiseAbs().maxCoeff() / tol);
  }
  v.require(worst_ratio < 10.0, "tolerance halving changes final state by at most " + fmt(worst_ratio, 3) + " x tol");
}

void c10(Verdict& v) {
  ModelParams p = preset_fig3();
  SimulationOptions o;
  o.t_end = 80.0;  // slow time, 4000 fast units
  ModelParams quiet = p;
  quiet.stimulus.V = 0.0;
  const FullState rest = rest_state(p);
  const Trajectory q = simulate_full(quiet, rest, o);
  double drift = 0.0;
  const double r[6] = {rest.p1, rest.p2, rest.d, rest.f, rest.g_syn, rest.v};
  for (const auto& s : q.states)
    for (int k = 0; k < 6; ++k) drift = std::max(drift, std::abs(s[k] - r[k]));
  v.require(drift < 1e-9, "zero stimulus: max deviation from rest " + fmt(drift, 3));

  FullState start = rest;
  start.p2 = p.epsilon;  // on the invariant axis the stimulus alone blows p1 up in finite time
  const Trajectory tr = simulate_full(p, start, o);
  const TailParams& k = p.tail;
  const double vlo = std::min(k.E_L, k.E_syn) - 0.5, vhi = std::max(k.E_L, k.E_syn) + 0.5;
  double dmin = 1e300, dmax = -1e300, fmin = 1e300, fmax = -1e300, vmin = 1e300, vmax = -1e300;
  for (const auto& s : tr.states) {
    dmin = std::min(dmin, s[2]);
    dmax = std::max(dmax, s[2]);
    fmin = std::min(fmin, s[3]);
    fmax = std::max(fmax, s[3]);
    vmin = std::min(vmin, s[5]);
    vmax = std::max(vmax, s[5]);
  }
  v.require(vmin >= vlo && vmax <= vhi, "fig3 stimulus: v in [" + fmt(vmin, 8) + ", " + fmt(vmax, 8) + "]");
  v.require(dmin >= 0.0 && dmax <= 1.0, "d in [" + fmt(dmin) + ", " + fmt(dmax) + "]");
  v.require(fmin >= k.f0 && fmax <= 1.0, "f in [" + fmt(fmin) + ", " + fmt(fmax) + "]");
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<void(Verdict&)>> checks = {{1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5},
                                                               {6, c6}, {7, c7}, {8, c8}, {9, c9}, {10, c10}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [n, f] : checks) selected.insert(n);
  bool all = true;
  for (int n : selected) {
    auto it = checks.find(n);
    if (it == checks.end()) {
      std::printf("criterion %d: FAIL unknown criterion\n", n);
      all = false;
      continue;
    }
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      it->second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception] " << e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", n, v.pass ? "PASS" : "FAIL", s, v.detail.str().c_str());
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
