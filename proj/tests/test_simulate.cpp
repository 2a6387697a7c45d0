#include "doctest.h"
#include "qlab/simulate.hpp"

using namespace qlab;

namespace {

Trajectory run(const ModelParams& p, double t_end = 4000.0) {
  SimulationOptions o;
  o.t_end = t_end;
  return simulate_core(p, {-p.b / p.a, p.epsilon}, o);
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("fig3: limit cycle after two loops") {
  const ModelParams p = preset_fig3();
  const Trajectory tr = run(p);
  const Classification c = classify_asymptotics(p, tr);
  CHECK(c.kind == AsymptoticKind::limit_cycle);
  CHECK(c.transient_loops == 2);
  CHECK(c.period == doctest::Approx(325.787).epsilon(1e-4));
  for (const auto& s : tr.states) CHECK(s[1] >= -1e-9);
}

TEST_CASE("fig4: back to S after two loops") {
  const ModelParams p = preset_fig4();
  const Classification c = classify_asymptotics(p, run(p));
  CHECK(c.kind == AsymptoticKind::equilibrium);
  CHECK(c.equilibrium == EquilibriumLabel::S);
  CHECK(c.transient_loops == 2);
}

TEST_CASE("fig6: slow passages on both quartic branches") {
  const ModelParams p = preset_fig6();
  const Trajectory tr = run(p);
  const Classification c = classify_asymptotics(p, tr);
  REQUIRE(c.kind == AsymptoticKind::limit_cycle);
  CHECK(c.period == doctest::Approx(104.285).epsilon(1e-4));
  const SlowPassage sp = slow_passage_fractions(p, tr, c);
  CHECK(sp.lower > 0.0);
  CHECK(sp.upper > 0.0);
}

TEST_CASE("spike events alternate and are reproducible") {
  const ModelParams p = preset_fig3();
  const Trajectory a = run(p, 1500.0), b = run(p, 1500.0);
  REQUIRE(a.events.size() == b.events.size());
  EventKind last = EventKind::spike_off;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].time == b.events[i].time);
    if (a.events[i].kind == EventKind::spike_on || a.events[i].kind == EventKind::spike_off) {
      CHECK(a.events[i].kind != last);
      last = a.events[i].kind;
    }
  }
}

TEST_CASE("rest without stimulus stays at rest") {
  ModelParams p = preset_fig3();
  p.stimulus.V = 0.0;
  SimulationOptions o;
  o.t_end = 500.0;
  const Trajectory tr = simulate_core(p, {-p.b / p.a, 0.0}, o);
  for (const auto& s : tr.states) {
    CHECK(std::abs(s[0] + p.b / p.a) < 1e-9);
    CHECK(s[1] == 0.0);
  }
  const Trajectory full = simulate_full(p, rest_state(p), o);
  const FullState r = rest_state(p);
  for (const auto& s : full.states) {
    CHECK(std::abs(s[0] - r.p1) < 1e-9);
    CHECK(std::abs(s[5] - r.v) < 1e-9);
  }
}

}
