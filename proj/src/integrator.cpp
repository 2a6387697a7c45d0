#include "qlab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "qlab/error.hpp"

namespace qlab {

namespace {

const double kS6 = std::sqrt(6.0);
const double kC1 = (4.0 - kS6) / 10.0;
const double kC2 = (4.0 + kS6) / 10.0;
const double kA[3][3] = {
    {(88.0 - 7.0 * kS6) / 360.0, (296.0 - 169.0 * kS6) / 1800.0, (-2.0 + 3.0 * kS6) / 225.0},
    {(296.0 + 169.0 * kS6) / 1800.0, (88.0 + 7.0 * kS6) / 360.0, (-2.0 - 3.0 * kS6) / 225.0},
    {(16.0 - kS6) / 36.0, (16.0 + kS6) / 36.0, 1.0 / 9.0}};
const double kU1 = 30.0 / (6.0 + std::cbrt(81.0) - std::cbrt(9.0));
const double kE1 = -(13.0 + 7.0 * kS6) / 3.0;
const double kE2 = (-13.0 + 7.0 * kS6) / 3.0;
const double kE3 = -1.0 / 3.0;
constexpr int kNewtonMaxIter = 6;
constexpr double kEps = 2.220446049250313e-16;

}  // namespace

Radau5::Radau5(const OdeSystem& sys, const IntegratorOptions& opt)
    : sys_(sys), opt_(opt), n_(sys.dim) {
  if (n_ <= 0 || !sys_.rhs) throw Error(ErrorKind::InvalidInput, "integrator: empty system");
  if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0))
    throw Error(ErrorKind::InvalidInput, "integrator: tolerances must be positive");
  atol_ = Eigen::VectorXd::Constant(n_, opt_.atol);
  if (!opt_.atol_per_component.empty()) {
    if (static_cast<int>(opt_.atol_per_component.size()) != n_)
      throw Error(ErrorKind::InvalidInput, "integrator: atol vector has wrong length");
    for (int i = 0; i < n_; ++i) atol_[i] = opt_.atol_per_component[i];
  }
  weights_ = Eigen::VectorXd::Ones(n_);
  if (!opt_.error_weights.empty()) {
    if (static_cast<int>(opt_.error_weights.size()) != n_)
      throw Error(ErrorKind::InvalidInput, "integrator: error weight vector has wrong length");
    for (int i = 0; i < n_; ++i) weights_[i] = opt_.error_weights[i];
  }
  weight_count_ = (weights_.array() != 0.0).count();
  if (weight_count_ == 0.0) throw Error(ErrorKind::InvalidInput, "integrator: all error weights are zero");
  nb_ = n_;
  if (opt_.jacobian_block > 0) {
    nb_ = opt_.jacobian_block;
    blocks_ = opt_.jacobian_block_count;
    if (!sys_.jacobian || blocks_ <= 0 || nb_ * blocks_ > n_)
      throw Error(ErrorKind::InvalidInput, "integrator: inconsistent block Jacobian layout");
  }
  jac_.resize(nb_, nb_);
  big_.resize(3 * nb_, 3 * nb_);
  e1_.resize(nb_, nb_);
  for (auto* v : {&z_, &f_, &g_, &dz_}) v->resize(3 * n_);
  ys_.resize(n_);
  fs_.resize(n_);
}

void Radau5::eval(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
  dy.resize(n_);
  sys_.rhs(t, y.data(), dy.data());
  ++nfev_;
}

void Radau5::eval_jacobian() {
  if (sys_.jacobian) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(nb_, nb_);
    sys_.jacobian(t_, y_.data(), rm.data());
    jac_ = rm;
    return;
  }
  Eigen::VectorXd yp = y_, fp;
  for (int j = 0; j < n_; ++j) {
    const double dj = std::sqrt(kEps) * std::max(1e-5, std::abs(y_[j]));
    yp[j] = y_[j] + dj;
    eval(t_, yp, fp);
    jac_.col(j) = (fp - f0_) / dj;
    yp[j] = y_[j];
  }
}

double Radau5::scaled_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) const {
  return std::sqrt((weights_.array() * v.array() / scale.array()).square().sum() / weight_count_);
}

void Radau5::solve_stages(const Eigen::VectorXd& rhs, Eigen::VectorXd& out, double) {
  if (nb_ == n_) {
    out = lu_big_.solve(rhs);
    return;
  }
  out = rhs;  // rows without Jacobian entries
  Eigen::VectorXd tmp(3 * nb_);
  for (int k = 0; k < blocks_; ++k) {
    for (int i = 0; i < 3; ++i) tmp.segment(i * nb_, nb_) = rhs.segment(i * n_ + k * nb_, nb_);
    tmp = lu_big_.solve(tmp);
    for (int i = 0; i < 3; ++i) out.segment(i * n_ + k * nb_, nb_) = tmp.segment(i * nb_, nb_);
  }
}

void Radau5::solve_error(const Eigen::VectorXd& rhs, Eigen::VectorXd& out, double h) {
  if (nb_ == n_) {
    out = lu_e1_.solve(rhs);
    return;
  }
  out = rhs / (kU1 / h);
  for (int k = 0; k < blocks_; ++k) out.segment(k * nb_, nb_) = lu_e1_.solve(rhs.segment(k * nb_, nb_));
}

void Radau5::reset(double t, const Eigen::VectorXd& y, double h) {
  if (y.size() != n_) throw Error(ErrorKind::InvalidInput, "integrator: state has wrong length");
  t_ = t;
  y_ = y;
  eval(t_, y_, f0_);
  have_dense_ = false;
  first_ = true;
  last_rejected_ = false;
  if (h > 0.0) {
    h_ = h;
    return;
  }
  // Hairer-Wanner starting step heuristic with the error-estimator order 3
  const Eigen::VectorXd scale = atol_.array() + y_.array().abs() * opt_.rtol;
  const double d0 = scaled_norm(y_, scale), d1 = scaled_norm(f0_, scale);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Eigen::VectorXd y1 = y_ + h0 * f0_, f1;
  eval(t_ + h0, y1, f1);
  const double d2 = scaled_norm(f1 - f0_, scale) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 0.25);
  h_ = std::min({100.0 * h0, h1, opt_.h_max});
}

void Radau5::dense(double t, Eigen::VectorXd& out) const {
  if (!have_dense_) {
    out = y_;
    return;
  }
  const double s = (t - t_old_) / h_old_;
  const double l1 = s * (s - kC2) * (s - 1.0) / (kC1 * (kC1 - kC2) * (kC1 - 1.0));
  const double l2 = s * (s - kC1) * (s - 1.0) / (kC2 * (kC2 - kC1) * (kC2 - 1.0));
  const double l3 = s * (s - kC1) * (s - kC2) / ((1.0 - kC1) * (1.0 - kC2));
  out = y_old_ + l1 * z1_ + l2 * z2_ + l3 * z3_;
}

void Radau5::step(double t_limit) {
  const int n = n_;
  const int nb = nb_;
  const double newton_tol = std::max(10.0 * kEps / opt_.rtol, std::min(0.03, std::sqrt(opt_.rtol)));
  eval_jacobian();
  Eigen::MatrixXd& big = big_;
  Eigen::MatrixXd& e1 = e1_;
  auto& lu_big = lu_big_;
  auto& lu_e1 = lu_e1_;
  Eigen::VectorXd &z = z_, &f = f_, &g = g_, &dz = dz_, &ys = ys_, &fs = fs_;
  bool recent_reject = false;

  while (true) {
    double h = std::min(h_, opt_.h_max);
    bool hit_limit = false;
    if (t_ + h >= t_limit - 4.0 * kEps * std::abs(t_limit)) {
      h = t_limit - t_;
      hit_limit = true;
    }
    if (h < 10.0 * kEps * std::max(1.0, std::abs(t_))) {
      std::ostringstream msg;
      msg << "integrator: step size " << h << " underflow at t = " << t_;
      throw Error(ErrorKind::StepSizeUnderflow, msg.str());
    }

    big.setIdentity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) big.block(i * nb, j * nb, nb, nb) -= (h * kA[i][j]) * jac_;
    lu_big.compute(big);
    e1 = -jac_;
    e1.diagonal().array() += kU1 / h;
    lu_e1.compute(e1);

    const Eigen::VectorXd scale_newton = atol_.array() + y_.array().abs() * opt_.rtol;
    if (have_dense_ && !first_) {
      Eigen::VectorXd p(n);
      const double cs[3] = {kC1, kC2, 1.0};
      for (int i = 0; i < 3; ++i) {
        dense(t_ + cs[i] * h, p);
        z.segment(i * n, n) = p - y_;
      }
    } else {
      z.setZero();
    }

    // simplified Newton iteration on the stage increments
    bool converged = false;
    int iters = 0;
    double dz_old = 0.0, rate = -1.0;
    const double cs[3] = {kC1, kC2, 1.0};
    for (int k = 0; k < kNewtonMaxIter; ++k) {
      iters = k + 1;
      for (int i = 0; i < 3; ++i) {
        ys = y_ + z.segment(i * n, n);
        eval(t_ + cs[i] * h, ys, fs);
        f.segment(i * n, n) = fs;
      }
      if (!f.allFinite()) break;
      for (int i = 0; i < 3; ++i) {
        g.segment(i * n, n) = z.segment(i * n, n);
        for (int j = 0; j < 3; ++j) g.segment(i * n, n) -= (h * kA[i][j]) * f.segment(j * n, n);
      }
      solve_stages(-g, dz, h);
      if (!dz.allFinite()) break;
      double dz_norm = 0.0;
      for (int i = 0; i < 3; ++i) dz_norm += std::pow(scaled_norm(dz.segment(i * n, n), scale_newton), 2);
      dz_norm = std::sqrt(dz_norm / 3.0);
      if (k > 0) rate = dz_norm / dz_old;
      if (rate >= 1.0 ||
          (rate > 0.0 && std::pow(rate, kNewtonMaxIter - k) / (1.0 - rate) * dz_norm > newton_tol))
        break;
      z += dz;
      if (dz_norm == 0.0 || (rate > 0.0 && rate / (1.0 - rate) * dz_norm < newton_tol)) {
        converged = true;
        break;
      }
      dz_old = dz_norm;
    }
    if (!converged) {
      h_ = 0.5 * h;
      recent_reject = true;
      ++rejected_;
      continue;
    }

    const Eigen::VectorXd z1 = z.segment(0, n), z2 = z.segment(n, n), z3 = z.segment(2 * n, n);
    const Eigen::VectorXd y_new = y_ + z3;
    const Eigen::VectorXd ze = (kE1 * z1 + kE2 * z2 + kE3 * z3) / h;
    Eigen::VectorXd err;
    solve_error(f0_ + ze, err, h);
    const Eigen::VectorXd scale = atol_.array() + y_.array().abs().max(y_new.array().abs()) * opt_.rtol;
    double err_norm = scaled_norm(err, scale);
    if (err_norm >= 1.0 && (first_ || recent_reject || last_rejected_)) {
      Eigen::VectorXd yt = y_ + err, ft;
      eval(t_, yt, ft);
      solve_error(ft + ze, err, h);
      err_norm = scaled_norm(err, scale);
    }
    if (!std::isfinite(err_norm)) err_norm = 1e10;

    const double safety = 0.9 * (2 * kNewtonMaxIter + 1) / (2 * kNewtonMaxIter + iters);
    if (err_norm >= 1.0) {
      const double factor = std::max(0.2, safety * std::pow(err_norm, -0.25));
      h_ = h * factor;
      recent_reject = true;
      last_rejected_ = true;
      ++rejected_;
      continue;
    }

    double factor = err_norm == 0.0 ? 10.0 : std::min(10.0, safety * std::pow(err_norm, -0.25));
    if (recent_reject) factor = std::min(1.0, factor);

    t_old_ = t_;
    h_old_ = h;
    y_old_ = y_;
    z1_ = z1;
    z2_ = z2;
    z3_ = z3;
    have_dense_ = true;
    t_ = hit_limit ? t_limit : t_ + h;
    y_ = y_new;
    eval(t_, y_, f0_);
    first_ = false;
    last_rejected_ = recent_reject;
    h_ = std::min(h * factor, opt_.h_max);
    return;
  }
}

namespace {

struct TimeTol {
  double tol;
  bool operator()(double a, double b) const { return std::abs(b - a) <= tol; }
};

}  // namespace

Solution integrate(const OdeSystem& sys, const Eigen::VectorXd& y0, double t0, double t1,
                   const IntegratorOptions& opt, const std::vector<EventFunction>& events,
                   const StepObserver& observer) {
  if (!(t1 > t0)) throw Error(ErrorKind::InvalidInput, "integrate: t1 must exceed t0");
  Solution sol;
  Radau5 solver(sys, opt);

  std::vector<double> stops;
  for (double b : opt.breakpoints)
    if (b > t0 && b < t1) stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(t1);

  if (opt.record_steps) {
    sol.t.push_back(t0);
    sol.y.push_back(y0);
  }
  std::vector<double> g_prev(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) g_prev[k] = events[k].g(t0, y0.data());

  double t = t0;
  Eigen::VectorXd y = y0;
  Eigen::VectorXd yd;
  long steps = 0;
  for (double stop : stops) {
    solver.reset(t, y, opt.h_init);
    while (solver.t() < stop) {
      if (++steps > opt.max_steps) {
        std::ostringstream msg;
        msg << "integrate: exceeded " << opt.max_steps << " steps at t = " << solver.t();
        throw Error(ErrorKind::MaxStepsExceeded, msg.str());
      }
      solver.step(stop);
      const double tn = solver.t();
      const Eigen::VectorXd& yn = solver.y();

      // locate every crossing inside the step, then keep those before the first terminal one
      std::vector<std::pair<double, std::size_t>> hits;
      std::vector<double> g_new(events.size());
      for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& ev = events[k];
        g_new[k] = ev.g(tn, yn.data());
        const bool rising = g_prev[k] < 0.0 && g_new[k] >= 0.0;
        const bool falling = g_prev[k] > 0.0 && g_new[k] <= 0.0;
        if (!((rising && ev.direction >= 0) || (falling && ev.direction <= 0))) continue;
        auto gfun = [&](double s) {
          solver.dense(s, yd);
          return ev.g(s, yd.data());
        };
        const double ta = solver.t_prev();
        double ga = g_prev[k], gb = g_new[k];
        double troot = tn;
        if (gb != 0.0) {
          boost::uintmax_t it = 200;
          auto r = boost::math::tools::toms748_solve(gfun, ta, tn, ga, gb,
                                                     TimeTol{opt.event_time_tol}, it);
          troot = 0.5 * (r.first + r.second);
          if (rising ? gfun(troot) < 0.0 : gfun(troot) > 0.0) troot = r.second;
        }
        hits.emplace_back(troot, k);
      }
      std::sort(hits.begin(), hits.end());
      bool stopped = false;
      for (const auto& [th, k] : hits) {
        EventHit hit;
        hit.id = events[k].id;
        hit.t = th;
        solver.dense(th, yd);
        hit.y = yd;
        hit.direction = g_new[k] >= g_prev[k] ? 1 : -1;
        sol.events.push_back(hit);
        if (events[k].terminal) {
          stopped = true;
          if (opt.record_steps && th > sol.t.back()) {
            sol.t.push_back(th);
            sol.y.push_back(yd);
          }
          sol.stopped_by_event = true;
          sol.t_final = th;
          sol.y_final = yd;
          break;
        }
      }
      if (stopped) {
        if (observer) observer(sol.t_final, sol.y_final);
        sol.steps = steps;
        sol.rejected += solver.rejected();
        sol.rhs_evals += solver.rhs_evals();
        return sol;
      }
      g_prev = g_new;
      if (opt.record_steps) {
        sol.t.push_back(tn);
        sol.y.push_back(yn);
      }
      if (observer) observer(tn, yn);
    }
    t = solver.t();
    y = solver.y();
    sol.rejected += solver.rejected();
    sol.rhs_evals += solver.rhs_evals();
  }
  sol.steps = steps;
  sol.t_final = t;
  sol.y_final = y;
  return sol;
}

}  // namespace qlab
