#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qlab/equilibria.hpp"
#include "qlab/model.hpp"

namespace qlab {

enum class BranchKind { equilibrium, limit_cycle };
enum class Termination {
  none,
  alpha_range_end,
  domain_edge,
  period_overflow,
  step_underflow,
  connects_to,
  fold_turnaround,
  max_points,
};
std::string_view to_string(BranchKind k) noexcept;
std::string_view to_string(Termination t) noexcept;

struct BranchPoint {
  double alpha = 0.0;
  double p1_max = 0.0;
  double p1_min = 0.0;
  double p2_max = 0.0;
  double log_p2_min = 0.0;  // ln of the smallest p2 along the cycle
  std::optional<double> period;
  Stability stability = Stability::stable;
  /// Limit cycles: trivial multiplier first, then the nontrivial one. The nontrivial
  /// multiplier may underflow, so its log modulus is kept separately.
  std::vector<std::complex<double>> floquet;
  double log_abs_mu = 0.0;
  int n_segments = 0;
  double residual = 0.0;
};

struct HopfPoint {
  std::string label;  // H1 has the largest alpha
  double alpha = 0.0;
  SlowFastState location;
  double frequency = 0.0;
};

struct Branch {
  BranchKind kind = BranchKind::equilibrium;
  std::vector<BranchPoint> points;
  std::string origin;
  Termination termination = Termination::none;
  std::string connects_to;  // Hopf label when termination == connects_to
  std::vector<HopfPoint> hopf;
  int folds = 0;
};

/// Branch of U~(alpha) = (Gamma(alpha), alpha) on [alpha_lo, alpha_hi] with Hopf points
/// located where the trace changes sign while det > 0.
Branch equilibrium_branch(const ModelParams& p, double alpha_lo, double alpha_hi,
                          int samples = 400);

/// Periodic orbit in (p1, ln p2) for multiple shooting: nodes at normalized times
/// mesh[i] (mesh.front() = 0, mesh.back() = 1).
struct PeriodicOrbit {
  std::vector<double> mesh;
  std::vector<Eigen::Vector2d> nodes;
  double period = 0.0;
  double alpha = 0.0;
};

struct LcOptions {
  double seed_radius = 1e-3;
  double ds_init = 1e-2;
  double ds_min = 1e-8;
  double ds_max = 0.2;
  /// Steps are parametrized by alpha when its share of the unit tangent exceeds this.
  double alpha_param_share = 0.005;
  double alpha_step_max = 0.1;  // relative
  double T_max = 1e4;
  int max_points = 3000;
  int min_segments = 32;
  int max_segments = 3000;
  double growth_target = 1e3;  // per-segment bound on the monodromy factor norm
  double rtol = 1e-11;
  double atol = 1e-11;
  double newton_tol = 1e-9;
  int newton_max_iter = 12;
  double alpha_min = 1e-5;
  double alpha_max = 10.0;
  double connect_alpha_tol = 1e-3;
  double connect_summary_rtol = 1e-2;
  int max_folds = 40;
  double max_seconds = 0.0;  // 0 disables the wall-clock budget
};

struct LcSeed {
  PeriodicOrbit orbit;
  HopfPoint hopf;
  double residual = 0.0;
  double linear_period = 0.0;
  double p2_amplitude = 0.0;  // max - min of p2 along the seed
  Eigen::Vector2d radial;     // direction used for the amplitude constraint
};

/// Small cycle from the linearization at `hopf` (radius opt.seed_radius, period
/// 2 pi / frequency), corrected with alpha and the period free. Throws SeedCorrectionFailed.
LcSeed lc_seed_near_hopf(const ModelParams& p, const HopfPoint& hopf, const LcOptions& opt = {});

/// Pseudo-arclength continuation of the cycle family through `seed`, leaving the Hopf
/// point. `hopfs` are used to recognise a connection to another Hopf point.
Branch lc_continue(const ModelParams& p, const LcSeed& seed, const std::vector<HopfPoint>& hopfs,
                   const LcOptions& opt = {}, PeriodicOrbit* last_orbit = nullptr);

/// Cycle branches from every Hopf point, largest alpha first. A Hopf point already
/// reached by an earlier branch (connects_to) is not continued again.
std::vector<Branch> lc_branches(const ModelParams& p, const std::vector<HopfPoint>& hopfs,
                                const LcOptions& opt = {});

struct TopologyReport {
  std::vector<std::pair<std::string, std::string>> connected;
  std::vector<std::string> toward_small_alpha;
  std::vector<std::string> inconclusive;
  std::string summary() const;
};

TopologyReport branch_topology(const std::vector<HopfPoint>& hopfs, const std::vector<Branch>& branches,
                               const LcOptions& opt = {});

/// Maximum shooting residual of `orbit` (used by tests and the manifest).
double periodic_residual(const ModelParams& p, const PeriodicOrbit& orbit, const LcOptions& opt = {});

/// Dense samples (t, p1, p2) of one period of `orbit`.
std::vector<Eigen::Vector3d> sample_orbit(const ModelParams& p, const PeriodicOrbit& orbit,
                                          const LcOptions& opt = {});

}  // namespace qlab
