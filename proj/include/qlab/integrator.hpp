#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace qlab {

/// Autonomous or non-autonomous ODE y' = f(t, y) of fixed dimension. The Jacobian
/// callback writes a row-major dim x dim matrix; when empty a forward-difference
/// approximation is used.
struct OdeSystem {
  int dim = 0;
  std::function<void(double t, const double* y, double* dy)> rhs;
  std::function<void(double t, const double* y, double* jac)> jacobian;
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  /// Per-component absolute tolerances; overrides `atol` when non-empty.
  std::vector<double> atol_per_component;
  /// Components with weight 0 are integrated but ignored by error and Newton control.
  std::vector<double> error_weights;
  /// When positive, the Jacobian is block diagonal with `jacobian_block_count` copies of
  /// one jacobian_block x jacobian_block matrix (the callback writes only that block)
  /// followed by zero rows. Variational systems use this to keep the linear algebra small.
  int jacobian_block = 0;
  int jacobian_block_count = 0;
  double h_init = 0.0;  // 0 selects a conservative automatic start
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 20'000'000;
  /// Times at which the integration is stopped and restarted (input discontinuities).
  std::vector<double> breakpoints;
  bool record_steps = true;
  double event_time_tol = 1e-10;
};

/// Zero crossing g(t, y) = 0. direction +1 reports only rising crossings, -1 only
/// falling ones, 0 both. A terminal event stops the integration at the crossing.
struct EventFunction {
  std::function<double(double t, const double* y)> g;
  int direction = 0;
  bool terminal = false;
  int id = 0;
};

struct EventHit {
  int id = 0;
  double t = 0.0;
  Eigen::VectorXd y;
  int direction = 0;
};

struct Solution {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  std::vector<EventHit> events;
  bool stopped_by_event = false;
  long steps = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double t_final = 0.0;
  Eigen::VectorXd y_final;
};

/// Called after every accepted step with the step end point.
using StepObserver = std::function<void(double t, const Eigen::VectorXd& y)>;

/// Three-stage Radau IIA collocation method (order 5, L-stable) with Hairer's
/// embedded error estimate, simplified Newton iteration and collocation dense output.
class Radau5 {
 public:
  Radau5(const OdeSystem& sys, const IntegratorOptions& opt);

  void reset(double t, const Eigen::VectorXd& y, double h);

  /// Advances by one accepted step, never past t_limit. Throws StepSizeUnderflow.
  void step(double t_limit);

  double t() const { return t_; }
  const Eigen::VectorXd& y() const { return y_; }
  double h_next() const { return h_; }
  double t_prev() const { return t_old_; }

  /// Collocation polynomial of the last accepted step evaluated at t in [t_prev, t].
  void dense(double t, Eigen::VectorXd& out) const;

  long rejected() const { return rejected_; }
  long rhs_evals() const { return nfev_; }

 private:
  void eval(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy);
  void eval_jacobian();
  void solve_stages(const Eigen::VectorXd& rhs, Eigen::VectorXd& out, double h);
  void solve_error(const Eigen::VectorXd& rhs, Eigen::VectorXd& out, double h);
  double scaled_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) const;

  const OdeSystem& sys_;
  IntegratorOptions opt_;
  int n_;
  int nb_ = 0;  // size of the Jacobian actually factorized
  int blocks_ = 1;
  double t_ = 0.0, h_ = 0.0, t_old_ = 0.0, h_old_ = 0.0;
  Eigen::VectorXd y_, f0_, y_old_;
  Eigen::VectorXd z1_, z2_, z3_;  // stage increments of the last accepted step
  Eigen::MatrixXd jac_;
  Eigen::MatrixXd big_, e1_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_big_, lu_e1_;
  Eigen::VectorXd z_, f_, g_, dz_, ys_, fs_;
  Eigen::VectorXd atol_;
  Eigen::VectorXd weights_;
  double weight_count_ = 0.0;
  double faccon_ = 1.0;
  bool have_dense_ = false;
  bool first_ = true;
  bool last_rejected_ = false;
  long rejected_ = 0;
  long nfev_ = 0;
};

/// Integrates from (t0, y0) to t1 (t1 > t0), restarting at breakpoints and locating
/// events on the dense output to opt.event_time_tol.
Solution integrate(const OdeSystem& sys, const Eigen::VectorXd& y0, double t0, double t1,
                   const IntegratorOptions& opt, const std::vector<EventFunction>& events = {},
                   const StepObserver& observer = {});

}  // namespace qlab
