#pragma once

#include <array>
#include <string_view>

#include <Eigen/Dense>

#include "qlab/quartic.hpp"

namespace qlab {

/// Time variable of the planar system: fast time t, or slow time tau = eps * t.
enum class Timescale { fast, slow };
std::string_view to_string(Timescale ts) noexcept;

/// Step input V * chi_[t_start, t_end)(t). The interval is expressed in `timescale`
/// and converted when the system is integrated in the other time variable.
struct Stimulus {
  double V = 0.0;
  double t_start = 0.0;
  double t_end = 0.04;
  Timescale timescale = Timescale::fast;
};

/// Constants of the synaptic tail (d, f, g_syn, v) of the six-dimensional model.
struct TailParams {
  double tau_D = 200.0;
  double tau_F = 2500.0;
  double f0 = 0.3;
  double F = 0.25;
  double tau_syn = 20.0;
  double gbar_syn = 0.4;
  double C = 0.196;
  double g_L = 1.0 / 220.0;
  double E_L = -55.0;
  double E_syn = -57.0;
};

struct ModelParams {
  double epsilon = 0.02;
  double a = -1.0;
  double b = -2.3;
  double a_tilde = -1.0;
  double b_tilde = -2.2;
  double alpha = 0.22;
  QuarticSpec quartic;
  Stimulus stimulus;
  TailParams tail;

  /// Throws Error(InvalidInput) (or a quartic error) on any violated invariant.
  void validate() const;
};

struct SlowFastState {
  double p1 = 0.0;
  double p2 = 0.0;
};

struct FullState {
  double p1 = 0.0;
  double p2 = 0.0;
  double d = 1.0;
  double f = 0.3;
  double g_syn = 0.0;
  double v = -55.0;
};

/// Presets matching the transient scenarios of the fig3..fig6 configurations.
ModelParams preset_fig3();
ModelParams preset_fig4();
ModelParams preset_fig5();
ModelParams preset_fig6();

double stimulus_eval(const Stimulus& s, double t) noexcept;

/// Stimulus value at time `t` measured in `clock`.
double stimulus_at(const Stimulus& s, double t, Timescale clock, double epsilon) noexcept;

/// Product (p2 - (a p1 + b)) (p2 - (a~ p1 + b~)) (alpha - p2): the p1-nullcline factor.
double slow_nullcline_factor(const ModelParams& p, double p1, double p2) noexcept;

/// Planar vector field in fast time, (eps (g + V_in), p2 (p1 - Gamma(p2))), or
/// in slow time, (g + V_in, p2 (p1 - Gamma(p2)) / eps). `t` is in `timescale`.
std::array<double, 2> core_field(const ModelParams& p, SlowFastState s, double t,
                                 Timescale timescale) noexcept;

/// Layer equation: p1 frozen, returns dp2/dt.
double layer_field(const ModelParams& p, SlowFastState s, double p1_frozen) noexcept;

/// Reduced flow on the axis {p2 = 0}: alpha (a p1 + b)(a~ p1 + b~).
double axis_reduced_rate(const ModelParams& p, double p1) noexcept;

/// Right-hand side of the six-dimensional model in slow time tau.
std::array<double, 6> full_field(const ModelParams& p, const FullState& s, double tau) noexcept;

/// Rest state (-b/a, 0, 1, f0, 0, E_L).
FullState rest_state(const ModelParams& p) noexcept;

// ---------------------------------------------------------------------------
// Integration coordinates. Orbits that pass near the invariant axis reach
// p2 ~ exp(-1000) and beyond, so the planar core is integrated in (p1, u) with
// u = ln p2. The p2 = 0 axis itself is handled in direct coordinates.

namespace logcoords {

/// y = (p1, u); dy/dt in `timescale`, stimulus included.
void core_rhs(const ModelParams& p, double t, const double* y, double* dy, Timescale timescale);

/// Row-major 2x2 Jacobian of core_rhs with respect to (p1, u).
void core_jacobian(const ModelParams& p, const double* y, double* jac, Timescale timescale);

/// Derivative of the fast-time field with respect to alpha (no stimulus).
void core_dalpha(const ModelParams& p, const double* y, double* out);

/// Fast-time autonomous field (stimulus off) as Eigen objects, used by continuation.
Eigen::Vector2d core_field_fast(const ModelParams& p, const Eigen::Vector2d& y);
Eigen::Matrix2d core_jacobian_fast(const ModelParams& p, const Eigen::Vector2d& y);

/// y = (p1, u, d, f, g_syn, v) in slow time.
void full_rhs(const ModelParams& p, double tau, const double* y, double* dy);
void full_jacobian(const ModelParams& p, const double* y, double* jac);

}  // namespace logcoords

/// Direct (p1, p2) coordinates, used only for orbits on the axis p2 = 0.
namespace directcoords {
void core_rhs(const ModelParams& p, double t, const double* y, double* dy, Timescale timescale);
void core_jacobian(const ModelParams& p, const double* y, double* jac, Timescale timescale);
void full_rhs(const ModelParams& p, double tau, const double* y, double* dy);
void full_jacobian(const ModelParams& p, const double* y, double* jac);
}  // namespace directcoords

}  // namespace qlab
