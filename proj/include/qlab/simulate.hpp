#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qlab/equilibria.hpp"
#include "qlab/model.hpp"

namespace qlab {

enum class EventKind { spike_on, spike_off, landing, exit, fold_falloff };
std::string_view to_string(EventKind k) noexcept;

struct Event {
  EventKind kind = EventKind::spike_on;
  double time = 0.0;
  Eigen::VectorXd state;  // (p1, p2[, d, f, g_syn, v])
};

/// States are stored in (p1, p2, ...) even though the core is integrated in ln p2.
/// Planar runs use fast time, six-dimensional runs slow time.
struct Trajectory {
  Timescale timescale = Timescale::fast;
  bool full_model = false;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Event> events;
  /// Local maxima of p2 (time, p1, p2), used by the periodicity test.
  std::vector<Eigen::Vector3d> p2_maxima;
};

struct SimulationOptions {
  double t_end = 4000.0;
  double rtol = 1e-10;
  double atol = 1e-10;
  double delta = 0.0;  // landing/exit section height, 0 selects epsilon
  double spike_threshold = 0.5;
  double h_max = 0.0;  // 0 leaves the step unbounded
};

/// Planar system in fast time from `init` (p2 >= 0; p2 = 0 stays on the axis).
Trajectory simulate_core(const ModelParams& p, SlowFastState init, const SimulationOptions& opt);

/// Six-dimensional model in slow time.
Trajectory simulate_full(const ModelParams& p, const FullState& init, const SimulationOptions& opt);

enum class AsymptoticKind { equilibrium, limit_cycle, undecided };
std::string_view to_string(AsymptoticKind k) noexcept;

struct Classification {
  AsymptoticKind kind = AsymptoticKind::undecided;
  EquilibriumLabel equilibrium = EquilibriumLabel::S;
  double period = 0.0;
  double amplitude = 0.0;  // p2 maximum over the cycle
  double p1_min = 0.0;
  double p1_max = 0.0;
  int transient_loops = 0;
  double onset_time = 0.0;  // start of the periodic regime or of convergence
};

struct ClassifyOptions {
  double drift_tol = 1e-3;
  int consecutive_loops = 3;
  double equilibrium_tol = 1e-6;
  /// Equilibrium proximity must hold over this fraction of the run.
  double sustain_fraction = 0.05;
};

Classification classify_asymptotics(const ModelParams& p, const Trajectory& traj,
                                    const ClassifyOptions& opt = {});

/// Share of one period spent slowly (|dp2/dt| < eps * scale in fast time) on the lower
/// attracting quartic branch (between the first two folds) and on the upper one
/// (beyond the third fold).
struct SlowPassage {
  double lower = 0.0;
  double upper = 0.0;
};

SlowPassage slow_passage_fractions(const ModelParams& p, const Trajectory& traj,
                                   const Classification& cls, double scale = 1.0);

}  // namespace qlab
