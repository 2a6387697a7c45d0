#include "qlab/model.hpp"

#include <cmath>

#include "qlab/error.hpp"

namespace qlab {

std::string_view to_string(Timescale ts) noexcept {
  return ts == Timescale::fast ? "fast" : "slow";
}

void ModelParams::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorKind::InvalidInput, what); };
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("model: epsilon must lie in (0, 1)");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("model: alpha must be >= 0");
  if (a == 0.0 || a_tilde == 0.0) fail("model: a and a_tilde must be nonzero");
  if (!std::isfinite(b) || !std::isfinite(b_tilde)) fail("model: b, b_tilde not finite");
  quartic.validate();
  if (!tc_point(quartic, a_tilde, b_tilde).valid) {
    fail("model: Gamma(0) must be >= -b_tilde/a_tilde (transcritical point right of U)");
  }
  if (!(stimulus.V >= 0.0)) fail("model: stimulus amplitude must be >= 0");
  if (!(stimulus.t_start < stimulus.t_end)) fail("model: stimulus needs t_start < t_end");
  const TailParams& k = tail;
  if (!(k.tau_D > 0 && k.tau_F > 0 && k.tau_syn > 0 && k.gbar_syn > 0 && k.C > 0 && k.g_L > 0)) {
    fail("model: tail time constants, conductances and capacitance must be positive");
  }
  if (!(k.f0 >= 0.0 && k.f0 <= 1.0)) fail("model: f0 must lie in [0, 1]");
}

ModelParams preset_fig3() {
  ModelParams p;
  p.stimulus = Stimulus{2700.0, 0.0, 0.04, Timescale::fast};
  return p;
}

ModelParams preset_fig4() {
  ModelParams p = preset_fig3();
  p.b_tilde = -1.2;
  return p;
}

ModelParams preset_fig5() {
  ModelParams p = preset_fig3();
  p.alpha = 0.05;
  p.b = -1.3;
  p.b_tilde = -1.2;
  p.stimulus.V = 1350.0;
  return p;
}

ModelParams preset_fig6() {
  ModelParams p = preset_fig3();
  p.quartic.r[0] = 5.0;
  return p;
}

double stimulus_eval(const Stimulus& s, double t) noexcept {
  return (t >= s.t_start && t < s.t_end) ? s.V : 0.0;
}

double stimulus_at(const Stimulus& s, double t, Timescale clock, double epsilon) noexcept {
  if (s.V == 0.0) return 0.0;
  if (clock == s.timescale) return stimulus_eval(s, t);
  // fast t = tau / eps
  const double converted = clock == Timescale::slow ? t / epsilon : t * epsilon;
  return stimulus_eval(s, converted);
}

double slow_nullcline_factor(const ModelParams& p, double p1, double p2) noexcept {
  return (p2 - (p.a * p1 + p.b)) * (p2 - (p.a_tilde * p1 + p.b_tilde)) * (p.alpha - p2);
}

std::array<double, 2> core_field(const ModelParams& p, SlowFastState s, double t,
                                 Timescale timescale) noexcept {
  const double vin = stimulus_at(p.stimulus, t, timescale, p.epsilon);
  const double g = slow_nullcline_factor(p, s.p1, s.p2) + vin;
  const double h = s.p2 * (s.p1 - gamma_eval(p.quartic, s.p2));
  if (timescale == Timescale::fast) return {p.epsilon * g, h};
  return {g, h / p.epsilon};
}

double layer_field(const ModelParams& p, SlowFastState s, double p1_frozen) noexcept {
  return s.p2 * (p1_frozen - gamma_eval(p.quartic, s.p2));
}

double axis_reduced_rate(const ModelParams& p, double p1) noexcept {
  return p.alpha * (p.a * p1 + p.b) * (p.a_tilde * p1 + p.b_tilde);
}

std::array<double, 6> full_field(const ModelParams& p, const FullState& s, double tau) noexcept {
  const TailParams& k = p.tail;
  const double vin = stimulus_at(p.stimulus, tau, Timescale::slow, p.epsilon);
  const double release = s.d * s.f * s.p2;
  return {
      slow_nullcline_factor(p, s.p1, s.p2) + vin,
      s.p2 * (s.p1 - gamma_eval(p.quartic, s.p2)) / p.epsilon,
      (1.0 - s.d) / k.tau_D - release,
      (k.f0 - s.f) / k.tau_F + k.F * (1.0 - s.f) * s.p2,
      -s.g_syn / k.tau_syn + k.gbar_syn * release,
      (-k.g_L * (s.v - k.E_L) - s.g_syn * (s.v - k.E_syn)) / k.C,
  };
}

FullState rest_state(const ModelParams& p) noexcept {
  return FullState{-p.b / p.a, 0.0, 1.0, p.tail.f0, 0.0, p.tail.E_L};
}

namespace {

struct FactorPartials {
  double g, g_p1, g_p2;
};

FactorPartials factor_partials(const ModelParams& p, double p1, double p2) {
  const double A = p2 - (p.a * p1 + p.b);
  const double B = p2 - (p.a_tilde * p1 + p.b_tilde);
  const double C = p.alpha - p2;
  return {A * B * C, -p.a * B * C - p.a_tilde * A * C, B * C + A * C - A * B};
}

void tail_rhs(const ModelParams& p, double p2, const double* y, double* dy) {
  const TailParams& k = p.tail;
  const double d = y[2], f = y[3], gs = y[4], v = y[5];
  const double release = d * f * p2;
  dy[2] = (1.0 - d) / k.tau_D - release;
  dy[3] = (k.f0 - f) / k.tau_F + k.F * (1.0 - f) * p2;
  dy[4] = -gs / k.tau_syn + k.gbar_syn * release;
  dy[5] = (-k.g_L * (v - k.E_L) - gs * (v - k.E_syn)) / k.C;
}

// Rows 2..5 of the 6x6 tail Jacobian; dp2 is the derivative of p2 with respect to
// the second coordinate (p2 itself in log coordinates, 1 in direct ones).
void tail_jacobian(const ModelParams& p, double p2, double dp2, const double* y, double* J) {
  const TailParams& k = p.tail;
  const double d = y[2], f = y[3], gs = y[4], v = y[5];
  auto at = [J](int r, int c) -> double& { return J[r * 6 + c]; };
  for (int r = 2; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) at(r, c) = 0.0;
  }
  at(2, 1) = -d * f * dp2;
  at(2, 2) = -1.0 / k.tau_D - f * p2;
  at(2, 3) = -d * p2;
  at(3, 1) = k.F * (1.0 - f) * dp2;
  at(3, 3) = -1.0 / k.tau_F - k.F * p2;
  at(4, 1) = k.gbar_syn * d * f * dp2;
  at(4, 2) = k.gbar_syn * f * p2;
  at(4, 3) = k.gbar_syn * d * p2;
  at(4, 4) = -1.0 / k.tau_syn;
  at(5, 4) = -(v - k.E_syn) / k.C;
  at(5, 5) = (-k.g_L - gs) / k.C;
}

}  // namespace

namespace logcoords {

void core_rhs(const ModelParams& p, double t, const double* y, double* dy, Timescale timescale) {
  const double p1 = y[0];
  const double p2 = std::exp(y[1]);
  const double vin = stimulus_at(p.stimulus, t, timescale, p.epsilon);
  const double g = slow_nullcline_factor(p, p1, p2) + vin;
  const double h = p1 - gamma_eval(p.quartic, p2);
  if (timescale == Timescale::fast) {
    dy[0] = p.epsilon * g;
    dy[1] = h;
  } else {
    dy[0] = g;
    dy[1] = h / p.epsilon;
  }
}

void core_jacobian(const ModelParams& p, const double* y, double* jac, Timescale timescale) {
  const double p1 = y[0];
  const double p2 = std::exp(y[1]);
  const auto fp = factor_partials(p, p1, p2);
  const double s0 = timescale == Timescale::fast ? p.epsilon : 1.0;
  const double s1 = timescale == Timescale::fast ? 1.0 : 1.0 / p.epsilon;
  jac[0] = s0 * fp.g_p1;
  jac[1] = s0 * fp.g_p2 * p2;
  jac[2] = s1;
  jac[3] = -s1 * gamma_deriv(p.quartic, p2) * p2;
}

void core_dalpha(const ModelParams& p, const double* y, double* out) {
  const double p1 = y[0];
  const double p2 = std::exp(y[1]);
  const double A = p2 - (p.a * p1 + p.b);
  const double B = p2 - (p.a_tilde * p1 + p.b_tilde);
  out[0] = p.epsilon * A * B;
  out[1] = 0.0;
}

Eigen::Vector2d core_field_fast(const ModelParams& p, const Eigen::Vector2d& y) {
  const double p2 = std::exp(y[1]);
  return {p.epsilon * slow_nullcline_factor(p, y[0], p2), y[0] - gamma_eval(p.quartic, p2)};
}

Eigen::Matrix2d core_jacobian_fast(const ModelParams& p, const Eigen::Vector2d& y) {
  double j[4];
  core_jacobian(p, y.data(), j, Timescale::fast);
  Eigen::Matrix2d m;
  m << j[0], j[1], j[2], j[3];
  return m;
}

void full_rhs(const ModelParams& p, double tau, const double* y, double* dy) {
  const double p1 = y[0];
  const double p2 = std::exp(y[1]);
  const double vin = stimulus_at(p.stimulus, tau, Timescale::slow, p.epsilon);
  dy[0] = slow_nullcline_factor(p, p1, p2) + vin;
  dy[1] = (p1 - gamma_eval(p.quartic, p2)) / p.epsilon;
  tail_rhs(p, p2, y, dy);
}

void full_jacobian(const ModelParams& p, const double* y, double* jac) {
  const double p1 = y[0];
  const double p2 = std::exp(y[1]);
  const auto fp = factor_partials(p, p1, p2);
  for (int c = 0; c < 6; ++c) jac[c] = jac[6 + c] = 0.0;
  jac[0] = fp.g_p1;
  jac[1] = fp.g_p2 * p2;
  jac[6] = 1.0 / p.epsilon;
  jac[7] = -gamma_deriv(p.quartic, p2) * p2 / p.epsilon;
  tail_jacobian(p, p2, p2, y, jac);
}

}  // namespace logcoords

namespace directcoords {

void core_rhs(const ModelParams& p, double t, const double* y, double* dy, Timescale timescale) {
  const auto f = core_field(p, SlowFastState{y[0], y[1]}, t, timescale);
  dy[0] = f[0];
  dy[1] = f[1];
}

void core_jacobian(const ModelParams& p, const double* y, double* jac, Timescale timescale) {
  const double p1 = y[0], p2 = y[1];
  const auto fp = factor_partials(p, p1, p2);
  const double s0 = timescale == Timescale::fast ? p.epsilon : 1.0;
  const double s1 = timescale == Timescale::fast ? 1.0 : 1.0 / p.epsilon;
  jac[0] = s0 * fp.g_p1;
  jac[1] = s0 * fp.g_p2;
  jac[2] = s1 * p2;
  jac[3] = s1 * ((p1 - gamma_eval(p.quartic, p2)) - p2 * gamma_deriv(p.quartic, p2));
}

void full_rhs(const ModelParams& p, double tau, const double* y, double* dy) {
  const double p1 = y[0], p2 = y[1];
  const double vin = stimulus_at(p.stimulus, tau, Timescale::slow, p.epsilon);
  dy[0] = slow_nullcline_factor(p, p1, p2) + vin;
  dy[1] = p2 * (p1 - gamma_eval(p.quartic, p2)) / p.epsilon;
  tail_rhs(p, p2, y, dy);
}

void full_jacobian(const ModelParams& p, const double* y, double* jac) {
  const double p1 = y[0], p2 = y[1];
  const auto fp = factor_partials(p, p1, p2);
  for (int c = 0; c < 6; ++c) jac[c] = jac[6 + c] = 0.0;
  jac[0] = fp.g_p1;
  jac[1] = fp.g_p2;
  jac[6] = p2 / p.epsilon;
  jac[7] = ((p1 - gamma_eval(p.quartic, p2)) - p2 * gamma_deriv(p.quartic, p2)) / p.epsilon;
  tail_jacobian(p, p2, 1.0, y, jac);
}

}  // namespace directcoords

}  // namespace qlab
