#include "qlab/entry_exit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "qlab/error.hpp"
#include "qlab/integrator.hpp"

namespace qlab {

std::string_view to_string(ExitMethod m) noexcept {
  switch (m) {
    case ExitMethod::closed_form: return "closed_form";
    case ExitMethod::quadrature: return "quadrature";
    case ExitMethod::simulation: return "simulation";
  }
  return "?";
}

namespace {

struct Poles {
  double first;   // -b/a
  double second;  // -b~/a~
};

Poles poles_of(const ModelParams& p) {
  if (p.a == 0.0 || p.a_tilde == 0.0)
    throw Error(ErrorKind::InvalidInput, "entry-exit: a and a_tilde must be nonzero");
  const double det = p.a_tilde * p.b - p.a * p.b_tilde;
  if (std::abs(det) <= 1e-14 * (std::abs(p.a_tilde * p.b) + std::abs(p.a * p.b_tilde)))
    throw Error(ErrorKind::InvalidInput, "entry-exit: coincident poles (a b~ = a~ b)");
  return {-p.b / p.a, -p.b_tilde / p.a_tilde};
}

void check_poles(const ModelParams& p, double lo, double hi) {
  const Poles poles = poles_of(p);
  for (double x : {poles.first, poles.second}) {
    if (x >= lo && x <= hi) {
      std::ostringstream msg;
      msg << "exit_integral: pole " << x << " inside [" << lo << ", " << hi << "]";
      throw Error(ErrorKind::PoleInInterval, msg.str());
    }
  }
}

double integrand(const ModelParams& p, double g0, double x) {
  return (x - g0) / ((p.a * x + p.b) * (p.a_tilde * x + p.b_tilde));
}

double closed_form(const ModelParams& p, double g0, double lo, double hi) {
  const double det = p.a_tilde * p.b - p.a * p.b_tilde;
  const double ca = (p.b + p.a * g0) / det;
  const double cb = -(p.a_tilde * g0 + p.b_tilde) / det;
  const double la = std::log(std::abs((p.a * hi + p.b) / (p.a * lo + p.b)));
  const double lb = std::log(std::abs((p.a_tilde * hi + p.b_tilde) / (p.a_tilde * lo + p.b_tilde)));
  return ca / p.a * la + cb / p.a_tilde * lb;
}

double quadrature(const ModelParams& p, double g0, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  const Poles poles = poles_of(p);
  // far tail in x = exp(s) so the 1/x decay is resolved
  const double split = std::max({1.0, 4.0 * std::abs(g0), 4.0 * std::abs(poles.first),
                                 4.0 * std::abs(poles.second)});
  auto f = [&](double x) { return integrand(p, g0, x); };
  auto piece = [&](double x0, double x1) {
    if (x0 < split) return gauss_kronrod<double, 61>::integrate(f, x0, x1, 20, 1e-15);
    auto g = [&](double s) {
      const double x = std::exp(s);
      return f(x) * x;
    };
    return gauss_kronrod<double, 61>::integrate(g, std::log(x0), std::log(x1), 20, 1e-15);
  };
  if (hi <= split || lo >= split) return piece(lo, hi);
  return piece(lo, split) + piece(split, hi);
}

double integral_between(const ModelParams& p, double g0, double lo, double hi, ExitMethod m) {
  if (lo == hi) return 0.0;
  const double sign = lo < hi ? 1.0 : -1.0;
  const double x0 = std::min(lo, hi), x1 = std::max(lo, hi);
  check_poles(p, x0, x1);
  const double v = m == ExitMethod::quadrature ? quadrature(p, g0, x0, x1)
                                               : closed_form(p, g0, x0, x1);
  return sign * v;
}

double default_p11_max(const ModelParams& p) {
  double m = 0.0;
  for (const auto& fp : fold_points(p.quartic)) m = std::max(m, std::abs(fp.p1));
  return 10.0 * std::max(m, 1e-3);
}

}  // namespace

double exit_integral(const ModelParams& p, double p10, double p11, ExitMethod method) {
  if (method == ExitMethod::simulation)
    throw Error(ErrorKind::InvalidInput, "exit_integral: simulation is not an integration method");
  const double g0 = gamma_eval(p.quartic, 0.0);
  return integral_between(p, g0, p10, p11, method);
}

EntryExitResult exit_point(const ModelParams& p, double p10, ExitMethod method,
                           const EntryExitOptions& opt) {
  if (method == ExitMethod::simulation)
    throw Error(ErrorKind::InvalidInput, "exit_point: use simulated_exit for simulation");
  const Poles poles = poles_of(p);
  const double g0 = gamma_eval(p.quartic, 0.0);
  if (!(p10 > poles.second && p10 <= g0)) {
    std::ostringstream msg;
    msg << "exit_point: p10 = " << p10 << " outside (" << poles.second << ", " << g0 << "]";
    throw Error(ErrorKind::EntryOutOfRange, msg.str());
  }
  if (poles.first > g0)
    throw Error(ErrorKind::InvalidInput, "exit_point: pole -b/a lies above Gamma(0)");
  EntryExitResult res;
  res.p10 = p10;
  res.method = method;
  if (p10 == g0) {
    res.p11 = g0;
    return res;
  }
  const double p11_max = opt.p11_max > 0.0 ? opt.p11_max : default_p11_max(p);
  const double deficit = integral_between(p, g0, p10, g0, method);  // negative
  auto fun = [&](double x) { return deficit + integral_between(p, g0, g0, x, method); };

  double lo = g0, hi = g0 + std::max(1.0, std::abs(g0));
  double flo = deficit, fhi = fun(std::min(hi, p11_max));
  hi = std::min(hi, p11_max);
  while (fhi < 0.0) {
    if (hi >= p11_max) {
      std::ostringstream msg;
      msg << "exit_point: no exit for p10 = " << p10 << " below p11_max = " << p11_max;
      throw Error(ErrorKind::NoExit, msg.str());
    }
    lo = hi;
    flo = fhi;
    hi = std::min(p11_max, g0 + 2.0 * (hi - g0) + 1.0);
    fhi = fun(hi);
  }
  if (fhi == 0.0) {
    res.p11 = hi;
    return res;
  }
  const double rtol = opt.root_rtol;
  auto tol = [rtol](double x, double y) {
    return std::abs(y - x) <= rtol * std::max(1.0, std::max(std::abs(x), std::abs(y)));
  };
  boost::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(fun, lo, hi, flo, fhi, tol, iters);
  res.p11 = 0.5 * (r.first + r.second);
  res.residual = std::abs(fun(res.p11));
  return res;
}

EntryExitResult simulated_exit(const ModelParams& p, double p10, double delta,
                               const SimulatedExitOptions& opt) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidInput, "simulated_exit: delta must be positive");
  ModelParams quiet = p;
  quiet.stimulus.V = 0.0;
  EntryExitResult res;
  res.p10 = p10;
  res.method = ExitMethod::simulation;
  const double u0 = std::log(delta);
  double dy0[2];
  const double y0a[2] = {p10, u0};
  logcoords::core_rhs(quiet, 0.0, y0a, dy0, Timescale::fast);
  if (dy0[1] > 0.0) {
    res.p11 = p10;
    return res;
  }
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [&](double t, const double* y, double* dy) {
    logcoords::core_rhs(quiet, t, y, dy, Timescale::fast);
  };
  sys.jacobian = [&](double, const double* y, double* j) {
    logcoords::core_jacobian(quiet, y, j, Timescale::fast);
  };
  IntegratorOptions io;
  io.rtol = opt.rtol;
  io.atol = opt.atol;
  io.record_steps = false;
  EventFunction exit_ev{[u0](double, const double* y) { return y[1] - u0; }, +1, true, 0};
  EventFunction blow{[&opt](double, const double* y) { return std::abs(y[0]) - opt.p1_blowup; },
                     +1, true, 1};
  Eigen::VectorXd y0(2);
  y0 << p10, u0;
  const auto sol = integrate(sys, y0, 0.0, opt.t_max, io, {exit_ev, blow});
  if (!sol.stopped_by_event || sol.events.back().id != 0) {
    std::ostringstream msg;
    msg << "simulated_exit: no exit for p10 = " << p10 << " (t = " << sol.t_final
        << ", p1 = " << sol.y_final[0] << ")";
    throw Error(ErrorKind::NoExitBeforeTmax, msg.str());
  }
  res.p11 = sol.y_final[0];
  res.residual = std::abs(sol.y_final[1] - u0);
  return res;
}

bool upper_branch_accessible(const ModelParams& p, double p10, const EntryExitOptions& opt) {
  const auto r = exit_point(p, p10, ExitMethod::closed_form, opt);
  const auto folds = fold_points(p.quartic);
  double local_max_p1 = folds[1].p1;
  for (const auto& f : folds)
    if (f.kind == FoldKind::local_max) local_max_p1 = f.p1;
  return r.p11 > local_max_p1;
}

}  // namespace qlab
