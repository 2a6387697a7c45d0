#include "qlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qlab/error.hpp"
#include "qlab/integrator.hpp"

namespace qlab {

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::spike_on: return "spike_on";
    case EventKind::spike_off: return "spike_off";
    case EventKind::landing: return "landing";
    case EventKind::exit: return "exit";
    case EventKind::fold_falloff: return "fold_falloff";
  }
  return "?";
}

std::string_view to_string(AsymptoticKind k) noexcept {
  switch (k) {
    case AsymptoticKind::equilibrium: return "equilibrium";
    case AsymptoticKind::limit_cycle: return "limit_cycle";
    case AsymptoticKind::undecided: return "undecided";
  }
  return "?";
}

namespace {

enum EventId { kSpike = 0, kDelta = 1, kFold = 2, kMax = 3 };

Eigen::VectorXd to_direct(const Eigen::VectorXd& y, bool log_coords) {
  Eigen::VectorXd out = y;
  if (log_coords) out[1] = std::exp(y[1]);
  return out;
}

Trajectory run(const ModelParams& p, const Eigen::VectorXd& y0_direct, bool full,
               const SimulationOptions& opt) {
  p.validate();
  if (!(opt.t_end > 0.0)) throw Error(ErrorKind::InvalidInput, "simulate: t_end must be positive");
  if (y0_direct[1] < 0.0) throw Error(ErrorKind::InvalidInput, "simulate: p2 must be >= 0");
  const bool log_coords = y0_direct[1] > 0.0;
  const Timescale clock = full ? Timescale::slow : Timescale::fast;
  const int n = full ? 6 : 2;

  OdeSystem sys;
  sys.dim = n;
  if (full) {
    sys.rhs = [&p, log_coords](double t, const double* y, double* dy) {
      log_coords ? logcoords::full_rhs(p, t, y, dy) : directcoords::full_rhs(p, t, y, dy);
    };
    sys.jacobian = [&p, log_coords](double, const double* y, double* j) {
      log_coords ? logcoords::full_jacobian(p, y, j) : directcoords::full_jacobian(p, y, j);
    };
  } else {
    sys.rhs = [&p, log_coords](double t, const double* y, double* dy) {
      log_coords ? logcoords::core_rhs(p, t, y, dy, Timescale::fast)
                 : directcoords::core_rhs(p, t, y, dy, Timescale::fast);
    };
    sys.jacobian = [&p, log_coords](double, const double* y, double* j) {
      log_coords ? logcoords::core_jacobian(p, y, j, Timescale::fast)
                 : directcoords::core_jacobian(p, y, j, Timescale::fast);
    };
  }

  IntegratorOptions io;
  io.rtol = opt.rtol;
  io.atol = opt.atol;
  if (opt.h_max > 0.0) io.h_max = opt.h_max;
  const double scale = [&] {
    if (p.stimulus.timescale == clock) return 1.0;
    return clock == Timescale::fast ? 1.0 / p.epsilon : p.epsilon;
  }();
  io.breakpoints = {p.stimulus.t_start * scale, p.stimulus.t_end * scale};

  std::vector<EventFunction> events;
  if (log_coords) {
    const double ls = std::log(opt.spike_threshold);
    const double ld = std::log(opt.delta > 0.0 ? opt.delta : p.epsilon);
    const double lf = std::log(fold_points(p.quartic)[0].p2);
    events.push_back({[ls](double, const double* y) { return y[1] - ls; }, 0, false, kSpike});
    events.push_back({[ld](double, const double* y) { return y[1] - ld; }, 0, false, kDelta});
    events.push_back({[lf](double, const double* y) { return y[1] - lf; }, -1, false, kFold});
    events.push_back({[&p](double, const double* y) {
                        return y[0] - gamma_eval(p.quartic, std::exp(y[1]));
                      },
                      -1, false, kMax});
  }

  Eigen::VectorXd y0 = y0_direct;
  if (log_coords) y0[1] = std::log(y0_direct[1]);
  const Solution sol = integrate(sys, y0, 0.0, opt.t_end, io, events);

  Trajectory traj;
  traj.timescale = clock;
  traj.full_model = full;
  traj.times = sol.t;
  traj.states.reserve(sol.y.size());
  for (const auto& y : sol.y) traj.states.push_back(to_direct(y, log_coords));
  for (const auto& hit : sol.events) {
    const Eigen::VectorXd s = to_direct(hit.y, log_coords);
    switch (hit.id) {
      case kSpike:
        traj.events.push_back({hit.direction > 0 ? EventKind::spike_on : EventKind::spike_off, hit.t, s});
        break;
      case kDelta:
        traj.events.push_back({hit.direction > 0 ? EventKind::exit : EventKind::landing, hit.t, s});
        break;
      case kFold:
        traj.events.push_back({EventKind::fold_falloff, hit.t, s});
        break;
      case kMax:
        traj.p2_maxima.emplace_back(hit.t, s[0], s[1]);
        break;
      default: break;
    }
  }
  return traj;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

Trajectory simulate_core(const ModelParams& p, SlowFastState init, const SimulationOptions& opt) {
  Eigen::VectorXd y(2);
  y << init.p1, init.p2;
  return run(p, y, false, opt);
}

Trajectory simulate_full(const ModelParams& p, const FullState& init, const SimulationOptions& opt) {
  Eigen::VectorXd y(6);
  y << init.p1, init.p2, init.d, init.f, init.g_syn, init.v;
  return run(p, y, true, opt);
}

Classification classify_asymptotics(const ModelParams& p, const Trajectory& traj,
                                    const ClassifyOptions& opt) {
  Classification cls;
  if (traj.times.size() < 2) return cls;
  std::vector<double> spikes;
  for (const auto& e : traj.events)
    if (e.kind == EventKind::spike_on) spikes.push_back(e.time);
  auto spikes_before = [&](double t) {
    return static_cast<int>(std::lower_bound(spikes.begin(), spikes.end(), t) - spikes.begin());
  };
  const double t0 = traj.times.front(), t1 = traj.times.back();

  // equilibrium: proximity sustained up to the end of the run
  struct Candidate {
    EquilibriumLabel label;
    double p1, p2;
  };
  const Candidate cands[3] = {{EquilibriumLabel::S, -p.b / p.a, 0.0},
                              {EquilibriumLabel::U, -p.b_tilde / p.a_tilde, 0.0},
                              {EquilibriumLabel::U_tilde, gamma_eval(p.quartic, p.alpha), p.alpha}};
  for (const auto& c : cands) {
    auto dist = [&](const Eigen::VectorXd& s) { return std::hypot(s[0] - c.p1, s[1] - c.p2); };
    std::size_t k = traj.states.size();
    while (k > 0 && dist(traj.states[k - 1]) < opt.equilibrium_tol) --k;
    if (k == traj.states.size() || k == 0) {
      if (k == 0) {
        cls.kind = AsymptoticKind::equilibrium;
        cls.equilibrium = c.label;
        cls.onset_time = t0;
        return cls;
      }
      continue;
    }
    if (t1 - traj.times[k] >= opt.sustain_fraction * (t1 - t0)) {
      cls.kind = AsymptoticKind::equilibrium;
      cls.equilibrium = c.label;
      cls.onset_time = traj.times[k];
      cls.transient_loops = spikes_before(traj.times[k]);
      return cls;
    }
  }

  // limit cycle: successive p2 maxima with small period and amplitude drift
  const auto& mx = traj.p2_maxima;
  const double floor = 0.5 * p.epsilon;
  std::vector<Eigen::Vector3d> m;
  for (const auto& v : mx)
    if (v[2] > floor) m.push_back(v);
  const int need = opt.consecutive_loops;
  for (std::size_t k = 0; k + need + 1 < m.size(); ++k) {
    bool ok = true;
    for (int j = 0; j < need && ok; ++j) {
      const std::size_t i = k + j;
      const double per0 = m[i + 1][0] - m[i][0], per1 = m[i + 2][0] - m[i + 1][0];
      ok = rel(per1, per0) < opt.drift_tol && rel(m[i + 1][2], m[i][2]) < opt.drift_tol &&
           rel(m[i + 2][2], m[i + 1][2]) < opt.drift_tol;
    }
    if (!ok) continue;
    cls.kind = AsymptoticKind::limit_cycle;
    cls.onset_time = m[k][0];
    cls.period = m[k + need][0] - m[k + need - 1][0];
    cls.amplitude = m[k + need][2];
    const int before = spikes_before(m[k][0]);
    cls.transient_loops = m[k][2] >= 0.5 ? std::max(0, before - 1) : before;
    // p1 range over the last full period
    const double ta = m[k + need - 1][0], tb = m[k + need][0];
    cls.p1_min = std::numeric_limits<double>::infinity();
    cls.p1_max = -cls.p1_min;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      if (traj.times[i] < ta || traj.times[i] > tb) continue;
      cls.p1_min = std::min(cls.p1_min, traj.states[i][0]);
      cls.p1_max = std::max(cls.p1_max, traj.states[i][0]);
    }
    return cls;
  }
  return cls;
}

SlowPassage slow_passage_fractions(const ModelParams& p, const Trajectory& traj,
                                   const Classification& cls, double scale) {
  SlowPassage out;
  if (cls.kind != AsymptoticKind::limit_cycle || traj.full_model) return out;
  const auto folds = fold_points(p.quartic);
  const double tb = traj.times.back();
  const double ta = tb - cls.period;
  const double dt_scale = traj.timescale == Timescale::fast ? 1.0 : p.epsilon;
  double lower = 0.0, upper = 0.0;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    if (traj.times[i] < ta) continue;
    const double dt = traj.times[i + 1] - traj.times[i];
    const double p1 = traj.states[i][0], p2 = traj.states[i][1];
    const double v = std::abs(p2 * (p1 - gamma_eval(p.quartic, p2))) * dt_scale;
    if (v >= p.epsilon * scale) continue;
    if (p2 > folds[0].p2 && p2 < folds[1].p2) lower += dt;
    if (p2 > folds[2].p2) upper += dt;
  }
  out.lower = lower / cls.period;
  out.upper = upper / cls.period;
  return out;
}

}  // namespace qlab
