#include "qlab/continuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/tools/toms748_solve.hpp>

#include "qlab/error.hpp"
#include "qlab/integrator.hpp"

namespace qlab {

std::string_view to_string(BranchKind k) noexcept {
  return k == BranchKind::equilibrium ? "equilibrium" : "limit_cycle";
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::none: return "none";
    case Termination::alpha_range_end: return "alpha_range_end";
    case Termination::domain_edge: return "domain_edge";
    case Termination::period_overflow: return "period_overflow";
    case Termination::step_underflow: return "step_underflow";
    case Termination::connects_to: return "connects_to";
    case Termination::fold_turnaround: return "fold_turnaround";
    case Termination::max_points: return "max_points";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// equilibria

Branch equilibrium_branch(const ModelParams& p, double alpha_lo, double alpha_hi, int samples) {
  if (!(alpha_lo > 0.0) || !(alpha_hi > alpha_lo) || samples < 2)
    throw Error(ErrorKind::InvalidInput, "equilibrium_branch: need 0 < alpha_lo < alpha_hi");
  Branch br;
  br.kind = BranchKind::equilibrium;
  br.origin = "U_tilde";
  br.termination = Termination::alpha_range_end;

  auto trace_at = [&](double a) { return -a * gamma_deriv(p.quartic, a); };
  auto make_point = [&](double a) {
    ModelParams q = p;
    q.alpha = a;
    BranchPoint pt;
    pt.alpha = a;
    pt.p1_max = pt.p1_min = gamma_eval(p.quartic, a);
    pt.p2_max = a;
    const Eigen::Matrix2d J = jacobian(q, {pt.p1_max, a});
    const auto ev = eigenvalues_2x2(J);
    const double r0 = ev[0].real(), r1 = ev[1].real();
    if (std::min(std::abs(r0), std::abs(r1)) < 1e-10) pt.stability = Stability::non_hyperbolic;
    else pt.stability = (r0 < 0.0 && r1 < 0.0) ? Stability::stable : Stability::unstable;
    return pt;
  };

  std::vector<double> grid(samples);
  for (int i = 0; i < samples; ++i) grid[i] = alpha_lo + (alpha_hi - alpha_lo) * i / (samples - 1);
  std::vector<double> roots;
  for (int i = 0; i + 1 < samples; ++i) {
    const double a0 = grid[i], a1 = grid[i + 1];
    const double t0 = trace_at(a0), t1 = trace_at(a1);
    if (t0 == 0.0) {
      roots.push_back(a0);
      continue;
    }
    if ((t0 < 0.0) == (t1 < 0.0) || t1 == 0.0) continue;
    auto tol = [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::max(1.0, std::abs(x)); };
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(trace_at, a0, a1, t0, t1, tol, it);
    roots.push_back(0.5 * (r.first + r.second));
  }
  if (samples > 1 && trace_at(grid.back()) == 0.0) roots.push_back(grid.back());

  std::vector<double> all = grid;
  all.insert(all.end(), roots.begin(), roots.end());
  std::sort(all.begin(), all.end());
  for (double a : all) br.points.push_back(make_point(a));

  std::vector<HopfPoint> hopf;
  for (double a : roots) {
    ModelParams q = p;
    q.alpha = a;
    const Eigen::Matrix2d J = jacobian(q, {gamma_eval(p.quartic, a), a});
    const double det = J.determinant();
    if (!(det > 0.0)) continue;
    HopfPoint h;
    h.alpha = a;
    h.location = {gamma_eval(p.quartic, a), a};
    h.frequency = std::sqrt(det);
    hopf.push_back(h);
  }
  std::sort(hopf.begin(), hopf.end(), [](const HopfPoint& x, const HopfPoint& y) { return x.alpha > y.alpha; });
  for (std::size_t i = 0; i < hopf.size(); ++i) hopf[i].label = "H" + std::to_string(i + 1);
  br.hopf = hopf;
  return br;
}

// ---------------------------------------------------------------------------
// multiple shooting

namespace {

constexpr int kAug = 9;  // state, monodromy factor (column major), d/d alpha, log det

ModelParams autonomous(const ModelParams& p, double alpha) {
  ModelParams q = p;
  q.alpha = alpha;
  q.stimulus.V = 0.0;
  return q;
}

struct Segment {
  Eigen::Vector2d end;
  Eigen::Matrix2d phi = Eigen::Matrix2d::Identity();
  Eigen::Vector2d dalpha = Eigen::Vector2d::Zero();
  double log_det = 0.0;
  double growth = 1.0;
  double path = 0.0;
  double p1_min = 0.0, p1_max = 0.0, u_max = 0.0, u_min = 0.0;
};

Segment integrate_segment(const ModelParams& q, const Eigen::Vector2d& x0, double dt,
                          const LcOptions& opt, bool variational) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorKind::CorrectorDiverged, "shooting: nonpositive segment duration");
  OdeSystem sys;
  IntegratorOptions io;
  io.rtol = opt.rtol;
  io.atol = opt.atol;
  io.record_steps = false;
  Eigen::VectorXd y0;
  if (variational) {
    sys.dim = kAug;
    sys.rhs = [&q](double, const double* y, double* dy) {
      double j[4], fa[2];
      logcoords::core_rhs(q, 0.0, y, dy, Timescale::fast);
      logcoords::core_jacobian(q, y, j, Timescale::fast);
      logcoords::core_dalpha(q, y, fa);
      for (int c = 0; c < 3; ++c) {
        const double* v = y + 2 + 2 * c;
        dy[2 + 2 * c] = j[0] * v[0] + j[1] * v[1];
        dy[3 + 2 * c] = j[2] * v[0] + j[3] * v[1];
      }
      dy[6] += fa[0];
      dy[7] += fa[1];
      dy[8] = j[0] + j[3];
    };
    sys.jacobian = [&q](double, const double* y, double* jac) {
      logcoords::core_jacobian(q, y, jac, Timescale::fast);
    };
    io.jacobian_block = 2;
    io.jacobian_block_count = 4;
    io.error_weights = {1, 1, 0, 0, 0, 0, 0, 0, 0};
    y0 = Eigen::VectorXd::Zero(kAug);
    y0[2] = 1.0;
    y0[5] = 1.0;
  } else {
    sys.dim = 2;
    sys.rhs = [&q](double, const double* y, double* dy) {
      logcoords::core_rhs(q, 0.0, y, dy, Timescale::fast);
    };
    sys.jacobian = [&q](double, const double* y, double* j) {
      logcoords::core_jacobian(q, y, j, Timescale::fast);
    };
    y0 = Eigen::VectorXd::Zero(2);
  }
  y0[0] = x0[0];
  y0[1] = x0[1];

  Segment s;
  s.p1_min = s.p1_max = x0[0];
  s.u_max = s.u_min = x0[1];
  Eigen::Vector2d last = x0;
  auto observe = [&](double, const Eigen::VectorXd& y) {
    s.p1_min = std::min(s.p1_min, y[0]);
    s.p1_max = std::max(s.p1_max, y[0]);
    s.u_max = std::max(s.u_max, y[1]);
    s.u_min = std::min(s.u_min, y[1]);
    s.path += std::hypot(y[0] - last[0], y[1] - last[1]);
    last << y[0], y[1];
    if (variational) {
      const double nrm = std::sqrt(y.segment(2, 4).squaredNorm());
      s.growth = std::max(s.growth, nrm);
    }
  };
  const Solution sol = integrate(sys, y0, 0.0, dt, io, {}, observe);
  const Eigen::VectorXd& y = sol.y_final;
  if (!y.allFinite()) throw Error(ErrorKind::CorrectorDiverged, "shooting: non-finite state");
  s.end << y[0], y[1];
  if (variational) {
    s.phi << y[2], y[4], y[3], y[5];
    s.dalpha << y[6], y[7];
    s.log_det = y[8];
  }
  return s;
}

struct Evaluation {
  std::vector<Segment> seg;
  Eigen::VectorXd residual;  // 2m shooting residuals
  double max_residual = 0.0;
};

Evaluation evaluate(const ModelParams& p, const PeriodicOrbit& o, const LcOptions& opt,
                    bool variational) {
  const ModelParams q = autonomous(p, o.alpha);
  const int m = static_cast<int>(o.nodes.size());
  Evaluation ev;
  ev.seg.resize(m);
  ev.residual.resize(2 * m);
  for (int i = 0; i < m; ++i) {
    const double dt = o.period * (o.mesh[i + 1] - o.mesh[i]);
    ev.seg[i] = integrate_segment(q, o.nodes[i], dt, opt, variational);
    ev.residual.segment<2>(2 * i) = ev.seg[i].end - o.nodes[(i + 1) % m];
  }
  ev.max_residual = ev.residual.lpNorm<Eigen::Infinity>();
  return ev;
}

Eigen::VectorXd pack(const PeriodicOrbit& o) {
  const int m = static_cast<int>(o.nodes.size());
  Eigen::VectorXd x(2 * m + 2);
  for (int i = 0; i < m; ++i) x.segment<2>(2 * i) = o.nodes[i];
  x[2 * m] = o.period;
  x[2 * m + 1] = o.alpha;
  return x;
}

void unpack(const Eigen::VectorXd& x, PeriodicOrbit& o) {
  const int m = static_cast<int>(o.nodes.size());
  for (int i = 0; i < m; ++i) o.nodes[i] = x.segment<2>(2 * i);
  o.period = x[2 * m];
  o.alpha = x[2 * m + 1];
}

/// Scale-invariant arclength weights at x: node components relative to their size (node
/// mean), period and alpha relative to themselves.
Eigen::VectorXd arc_weights(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  const int m = (n - 2) / 2;
  Eigen::VectorXd w(n);
  for (int k = 0; k < 2 * m; ++k) w[k] = 1.0 / (m * (1.0 + x[k] * x[k]));
  w[n - 2] = 1.0 / (x[n - 2] * x[n - 2]);
  w[n - 1] = 1.0 / std::max(x[n - 1] * x[n - 1], 1e-6);
  return w;
}

double wdot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
  return (w.array() * a.array() * b.array()).sum();
}

/// Removes the time-shift direction (the vector field at every node) from v, so phase
/// drift does not count as progress along the branch.
Eigen::VectorXd unshifted(const ModelParams& p, const PeriodicOrbit& o, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& w) {
  const ModelParams q = autonomous(p, o.alpha);
  const int m = static_cast<int>(o.nodes.size());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(v.size());
  for (int i = 0; i < m; ++i) f.segment<2>(2 * i) = logcoords::core_field_fast(q, o.nodes[i]);
  const double ff = wdot(f, f, w);
  if (!(ff > 0.0)) return v;
  return v - (wdot(v, f, w) / ff) * f;
}

struct Phase {
  Eigen::Vector2d x0;
  Eigen::Vector2d dir;  // unit field direction at x0
};

Phase phase_from(const ModelParams& p, const PeriodicOrbit& o) {
  const ModelParams q = autonomous(p, o.alpha);
  Phase ph;
  ph.x0 = o.nodes[0];
  const Eigen::Vector2d f = logcoords::core_field_fast(q, ph.x0);
  ph.dir = f / f.norm();
  return ph;
}

/// Jacobian of (shooting residuals, phase) plus a final dense row.
Eigen::SparseMatrix<double> assemble(const ModelParams& p, const PeriodicOrbit& o, const Evaluation& ev,
                                     const Phase& ph, const Eigen::VectorXd& last_row) {
  const ModelParams q = autonomous(p, o.alpha);
  const int m = static_cast<int>(o.nodes.size());
  const int n = 2 * m + 2;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m * 12 + 2 + n);
  for (int i = 0; i < m; ++i) {
    const int r = 2 * i;
    const int cn = 2 * ((i + 1) % m);
    const auto& s = ev.seg[i];
    const Eigen::Vector2d fend = logcoords::core_field_fast(q, s.end);
    const double ds = o.mesh[i + 1] - o.mesh[i];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) trip.emplace_back(r + a, r + b, s.phi(a, b));
      trip.emplace_back(r + a, cn + a, -1.0);
      trip.emplace_back(r + a, 2 * m, ds * fend[a]);
      trip.emplace_back(r + a, 2 * m + 1, s.dalpha[a]);
    }
  }
  trip.emplace_back(2 * m, 0, ph.dir[0]);
  trip.emplace_back(2 * m, 1, ph.dir[1]);
  for (int c = 0; c < n; ++c)
    if (last_row[c] != 0.0) trip.emplace_back(n - 1, c, last_row[c]);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

bool solve_sparse(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& rhs, Eigen::VectorXd& out) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) return false;
  out = lu.solve(rhs);
  return lu.info() == Eigen::Success && out.allFinite();
}

struct Corrected {
  bool ok = false;
  int iterations = 0;
  Evaluation ev;  // variational evaluation at the solution
  double residual = 0.0;
};

/// Chord Newton on shooting + phase + (last_row . X = target). The Jacobian is refreshed
/// only when the contraction is poor; the returned evaluation always carries the
/// variational data at the solution.
Corrected correct(const ModelParams& p, PeriodicOrbit& o, const Phase& ph, const Eigen::VectorXd& last_row,
                  double target, const LcOptions& opt, double tol) {
  using Lu = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
  Corrected c;
  const int m = static_cast<int>(o.nodes.size());
  const int n = 2 * m + 2;
  double prev = std::numeric_limits<double>::infinity();
  Lu lu;
  bool have_lu = false;
  int refreshes = 0;
  try {
    for (int it = 0; it <= opt.newton_max_iter; ++it) {
      bool variational = !have_lu;
      c.ev = evaluate(p, o, opt, variational);
      const Eigen::VectorXd x = pack(o);
      Eigen::VectorXd g(n);
      g.head(2 * m) = c.ev.residual;
      g[2 * m] = ph.dir.dot(o.nodes[0] - ph.x0);
      g[n - 1] = last_row.dot(x) - target;
      const double res = g.lpNorm<Eigen::Infinity>();
      c.iterations = it;
      c.residual = res;
      if (res <= tol) {
        if (!variational) c.ev = evaluate(p, o, opt, true);
        c.ok = true;
        return c;
      }
      if (it == opt.newton_max_iter || !(res < 4.0 * prev)) return c;
      if (have_lu && res > 0.25 * prev) {
        if (++refreshes > 3) return c;
        c.ev = evaluate(p, o, opt, true);
        variational = true;
      }
      prev = res;
      if (variational) {
        const auto A = assemble(p, o, c.ev, ph, last_row);
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success) return c;
        have_lu = true;
      }
      const Eigen::VectorXd dx = lu.solve(-g);
      if (!dx.allFinite()) return c;
      const Eigen::VectorXd xn = x + dx;
      if (!(xn[2 * m] > 0.0) || !(xn[2 * m + 1] > 0.0)) return c;
      unpack(xn, o);
    }
  } catch (const Error&) {
    c.ok = false;
  }
  return c;
}

Eigen::VectorXd tangent(const ModelParams& p, const PeriodicOrbit& o, const Evaluation& ev, const Phase& ph,
                        const Eigen::VectorXd& reference, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(reference.size());
  const Eigen::VectorXd row = w.cwiseProduct(reference);
  const auto A = assemble(p, o, ev, ph, row);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd t;
  if (!solve_sparse(A, rhs, t)) throw Error(ErrorKind::CorrectorDiverged, "tangent: singular system");
  t /= std::sqrt(std::max(wdot(t, t, w), 1e-300));
  return t;
}

struct Floquet {
  double trivial = 1.0;
  double log_abs_mu = 0.0;
  double mu_sign = 1.0;
};

/// Multipliers from the factors expressed in frames [f^, n^] at the nodes; the product
/// is never formed, so strong non-normality does not pollute the trivial multiplier.
Floquet floquet_of(const ModelParams& p, const PeriodicOrbit& o, const Evaluation& ev) {
  const ModelParams q = autonomous(p, o.alpha);
  const int m = static_cast<int>(o.nodes.size());
  std::vector<Eigen::Vector2d> fh(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector2d f = logcoords::core_field_fast(q, o.nodes[i]);
    fh[i] = f / f.norm();
  }
  double log_triv = 0.0, log_det = 0.0, sign = 1.0;
  for (int i = 0; i < m; ++i) {
    const double b11 = fh[(i + 1) % m].dot(ev.seg[i].phi * fh[i]);
    log_triv += std::log(std::abs(b11));
    if (b11 < 0.0) sign = -sign;
    log_det += ev.seg[i].log_det;
  }
  Floquet fl;
  fl.trivial = sign * std::exp(log_triv);
  fl.log_abs_mu = log_det - log_triv;
  fl.mu_sign = sign;
  return fl;
}

BranchPoint summarize(const ModelParams& p, const PeriodicOrbit& o, const Evaluation& ev, double residual) {
  BranchPoint pt;
  pt.alpha = o.alpha;
  pt.period = o.period;
  pt.p1_min = std::numeric_limits<double>::infinity();
  pt.p1_max = -pt.p1_min;
  double u_max = -std::numeric_limits<double>::infinity();
  double u_min = std::numeric_limits<double>::infinity();
  for (const auto& s : ev.seg) {
    u_min = std::min(u_min, s.u_min);
    pt.p1_min = std::min(pt.p1_min, s.p1_min);
    pt.p1_max = std::max(pt.p1_max, s.p1_max);
    u_max = std::max(u_max, s.u_max);
  }
  pt.p2_max = std::exp(u_max);
  pt.log_p2_min = u_min;
  const Floquet fl = floquet_of(p, o, ev);
  pt.log_abs_mu = fl.log_abs_mu;
  pt.floquet = {std::complex<double>(fl.trivial), std::complex<double>(fl.mu_sign * std::exp(fl.log_abs_mu))};
  if (std::abs(fl.log_abs_mu) < 1e-8) pt.stability = Stability::non_hyperbolic;
  else pt.stability = fl.log_abs_mu < 0.0 ? Stability::stable : Stability::unstable;
  pt.n_segments = static_cast<int>(o.nodes.size());
  pt.residual = residual;
  return pt;
}

std::vector<double> mesh_cost(const PeriodicOrbit& o, const Evaluation& ev, const LcOptions& opt,
                              std::vector<double>& cost) {
  const int m = static_cast<int>(o.nodes.size());
  double total_path = 0.0;
  for (const auto& s : ev.seg) total_path += s.path;
  total_path = std::max(total_path, 1e-12);
  cost.assign(m, 0.0);
  std::vector<double> cum(m + 1, 0.0);
  const double lg = std::log(opt.growth_target);
  for (int i = 0; i < m; ++i) {
    const double ds = o.mesh[i + 1] - o.mesh[i];
    cost[i] = 2.0 * std::log(std::max(ev.seg[i].growth, 1.0)) / lg + 0.5 * opt.min_segments * ds +
              0.5 * opt.min_segments * ev.seg[i].path / total_path;
    cum[i + 1] = cum[i] + cost[i];
  }
  return cum;
}

int mesh_size(double total, const LcOptions& opt) {
  return std::clamp(static_cast<int>(std::ceil(total)), opt.min_segments, opt.max_segments);
}

/// New mesh equidistributing log-growth of the monodromy factors, path length and time.
PeriodicOrbit remesh(const ModelParams& p, const PeriodicOrbit& o, const Evaluation& ev, const LcOptions& opt,
                     std::vector<int>* origin) {
  const int m = static_cast<int>(o.nodes.size());
  std::vector<double> cost;
  const std::vector<double> cum = mesh_cost(o, ev, opt, cost);
  const int m_new = mesh_size(cum[m], opt);
  PeriodicOrbit out;
  out.period = o.period;
  out.alpha = o.alpha;
  out.mesh.resize(m_new + 1);
  out.nodes.resize(m_new);
  if (origin) origin->assign(m_new, 0);
  const ModelParams q = autonomous(p, o.alpha);
  int seg = 0;
  for (int k = 0; k < m_new; ++k) {
    const double target = cum[m] * k / m_new;
    while (seg + 1 < m && cum[seg + 1] <= target) ++seg;
    const double frac = cost[seg] > 0.0 ? (target - cum[seg]) / cost[seg] : 0.0;
    const double s = o.mesh[seg] + std::clamp(frac, 0.0, 1.0) * (o.mesh[seg + 1] - o.mesh[seg]);
    out.mesh[k] = s;
    const double dt = o.period * (s - o.mesh[seg]);
    out.nodes[k] = dt > 1e-14 * o.period ? integrate_segment(q, o.nodes[seg], dt, opt, false).end : o.nodes[seg];
    if (origin) (*origin)[k] = seg;
  }
  out.mesh[m_new] = 1.0;
  return out;
}

bool needs_remesh(const PeriodicOrbit& o, const Evaluation& ev, const LcOptions& opt) {
  double worst = 1.0;
  for (const auto& s : ev.seg) worst = std::max(worst, s.growth);
  if (worst > opt.growth_target) return true;
  std::vector<double> cost;
  const int m = static_cast<int>(o.nodes.size());
  return mesh_size(mesh_cost(o, ev, opt, cost).back(), opt) < 0.75 * m;
}

const HopfPoint* matching_hopf(const BranchPoint& pt, const std::vector<HopfPoint>& hopfs, const LcOptions& opt) {
  for (const auto& h : hopfs) {
    if (std::abs(pt.alpha - h.alpha) >= opt.connect_alpha_tol) continue;
    const double ref = std::max(std::abs(h.location.p1), 0.1);
    if (std::abs(pt.p1_max - h.location.p1) < opt.connect_summary_rtol * ref &&
        std::abs(pt.p1_min - h.location.p1) < opt.connect_summary_rtol * ref)
      return &h;
  }
  return nullptr;
}

}  // namespace

double periodic_residual(const ModelParams& p, const PeriodicOrbit& orbit, const LcOptions& opt) {
  return evaluate(p, orbit, opt, false).max_residual;
}

std::vector<Eigen::Vector3d> sample_orbit(const ModelParams& p, const PeriodicOrbit& o, const LcOptions& opt) {
  const ModelParams q = autonomous(p, o.alpha);
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [&q](double, const double* y, double* dy) { logcoords::core_rhs(q, 0.0, y, dy, Timescale::fast); };
  sys.jacobian = [&q](double, const double* y, double* j) { logcoords::core_jacobian(q, y, j, Timescale::fast); };
  IntegratorOptions io;
  io.rtol = opt.rtol;
  io.atol = opt.atol;
  std::vector<Eigen::Vector3d> out;
  const int m = static_cast<int>(o.nodes.size());
  for (int i = 0; i < m; ++i) {
    const double t0 = o.period * o.mesh[i];
    const double dt = o.period * (o.mesh[i + 1] - o.mesh[i]);
    const auto sol = integrate(sys, o.nodes[i], 0.0, dt, io);
    for (std::size_t k = (i == 0 ? 0 : 1); k < sol.t.size(); ++k)
      out.emplace_back(t0 + sol.t[k], sol.y[k][0], std::exp(sol.y[k][1]));
  }
  return out;
}

LcSeed lc_seed_near_hopf(const ModelParams& p, const HopfPoint& hopf, const LcOptions& opt) {
  if (!(hopf.frequency > 0.0) || !(hopf.alpha > 0.0))
    throw Error(ErrorKind::InvalidInput, "lc_seed_near_hopf: invalid Hopf point");
  const ModelParams q = autonomous(p, hopf.alpha);
  const Eigen::Vector2d xs(gamma_eval(p.quartic, hopf.alpha), std::log(hopf.alpha));
  const Eigen::Matrix2d J = logcoords::core_jacobian_fast(q, xs);
  Eigen::EigenSolver<Eigen::Matrix2d> es(J);
  int k = es.eigenvalues()[0].imag() > 0.0 ? 0 : 1;
  const double omega = es.eigenvalues()[k].imag();
  if (!(omega > 0.0)) throw Error(ErrorKind::SeedCorrectionFailed, "lc_seed_near_hopf: no complex pair");
  Eigen::Vector2cd v = es.eigenvectors().col(k);
  // rotate so the real and imaginary parts are orthogonal, real part longest
  const Eigen::Vector2d a0 = v.real(), b0 = v.imag();
  double theta = 0.5 * std::atan2(-2.0 * a0.dot(b0), a0.squaredNorm() - b0.squaredNorm());
  v *= std::polar(1.0, theta);
  if (v.imag().norm() > v.real().norm()) v *= std::complex<double>(0.0, 1.0);
  const double scale = v.real().norm();
  v /= scale;
  const Eigen::Vector2d a = v.real(), b = v.imag();

  LcSeed seed;
  seed.hopf = hopf;
  seed.linear_period = 2.0 * std::numbers::pi / omega;
  seed.radial = a;
  PeriodicOrbit& o = seed.orbit;
  const int m = opt.min_segments;
  o.alpha = hopf.alpha;
  o.period = seed.linear_period;
  o.mesh.resize(m + 1);
  o.nodes.resize(m);
  for (int i = 0; i <= m; ++i) o.mesh[i] = static_cast<double>(i) / m;
  for (int i = 0; i < m; ++i) {
    const double th = 2.0 * std::numbers::pi * o.mesh[i];
    o.nodes[i] = xs + opt.seed_radius * (a * std::cos(th) - b * std::sin(th));
  }
  const Phase ph = phase_from(p, o);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(2 * m + 2);
  row[0] = a[0];
  row[1] = a[1];
  const double target = a.dot(xs) + opt.seed_radius;
  const double tol = std::min(opt.newton_tol, 1e-11);
  Corrected c = correct(p, o, ph, row, target, opt, tol);
  if (!c.ok) {
    std::ostringstream msg;
    msg << "lc_seed_near_hopf: corrector failed at " << hopf.label << " (residual " << c.residual << ")";
    throw Error(ErrorKind::SeedCorrectionFailed, msg.str());
  }
  seed.residual = c.ev.max_residual;
  double u_lo = o.nodes[0][1], u_hi = u_lo;
  for (const auto& x : o.nodes) {
    u_lo = std::min(u_lo, x[1]);
    u_hi = std::max(u_hi, x[1]);
  }
  seed.p2_amplitude = std::exp(u_hi) - std::exp(u_lo);
  return seed;
}

Branch lc_continue(const ModelParams& p, const LcSeed& seed, const std::vector<HopfPoint>& hopfs,
                   const LcOptions& opt, PeriodicOrbit* last_orbit) {
  const auto t_start = std::chrono::steady_clock::now();
  Branch br;
  br.kind = BranchKind::limit_cycle;
  br.origin = seed.hopf.label;
  br.hopf = hopfs;

  PeriodicOrbit o = seed.orbit;
  Phase ph = phase_from(p, o);
  Evaluation ev = evaluate(p, o, opt, true);
  br.points.push_back(summarize(p, o, ev, ev.max_residual));

  // initial tangent: grow the amplitude constraint used by the seed
  int m = static_cast<int>(o.nodes.size());
  Eigen::VectorXd amp_dir = Eigen::VectorXd::Zero(2 * m + 2);
  amp_dir[0] = seed.radial[0];
  amp_dir[1] = seed.radial[1];
  Eigen::VectorXd w = arc_weights(pack(o));
  Eigen::VectorXd t = tangent(p, o, ev, ph, amp_dir.cwiseQuotient(w.cwiseMax(1e-300)), w);

  std::vector<const HopfPoint*> others;
  for (const auto& h : hopfs)
    if (h.label != seed.hopf.label) others.push_back(&h);
  std::vector<HopfPoint> other_hopfs;
  for (const auto* h : others) other_hopfs.push_back(*h);

  double ds = opt.ds_init;
  int since_remesh = 0;
  int alpha_dir = 0;
  double alpha_ext = o.alpha;
  double h_alpha = 0.0;
  bool was_by_alpha = false;
  bool t_is_secant = false;
  int alpha_failures = 0, hold_arclength = 0;
  double last_cosine = -2.0;
  while (true) {
    if (static_cast<int>(br.points.size()) >= opt.max_points) {
      br.termination = Termination::max_points;
      break;
    }
    if (opt.max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count() > opt.max_seconds) {
      br.termination = Termination::max_points;
      break;
    }
    const Eigen::VectorXd x_prev = pack(o);
    w = arc_weights(x_prev);
    const int ia = 2 * m + 1;
    // local parametrization: alpha itself while it moves monotonically, arclength otherwise
    const bool by_alpha = hold_arclength == 0 && std::abs(t[ia]) / o.alpha > opt.alpha_param_share;
    if (by_alpha && !was_by_alpha) h_alpha = std::clamp(std::abs(ds * t[ia]) / o.alpha, 1e-4, opt.alpha_step_max);
    was_by_alpha = by_alpha;
    PeriodicOrbit trial = o;
    Eigen::VectorXd row;
    double target;
    if (by_alpha) {
      const double da = (t[ia] < 0.0 ? -h_alpha : h_alpha) * o.alpha;
      unpack(x_prev + (da / t[ia]) * t, trial);
      row = Eigen::VectorXd::Zero(x_prev.size());
      row[ia] = 1.0;
      target = o.alpha + da;
    } else {
      Eigen::VectorXd tu = unshifted(p, o, t, w);
      tu /= std::sqrt(std::max(wdot(tu, tu, w), 1e-300));
      row = w.cwiseProduct(tu);
      unpack(x_prev + (ds / std::max(row.dot(t), 1e-12)) * t, trial);
      target = row.dot(x_prev) + ds;
    }
    Corrected c;
    if (trial.period > 0.0 && trial.alpha > 0.0) c = correct(p, trial, ph, row, target, opt, opt.newton_tol);
    // secant of the corrected step serves as the next predictor
    Eigen::VectorXd t_new;
    double cosine = 0.0;
    bool accept = c.ok;
    if (accept) {
      t_new = pack(trial) - x_prev;
      const Eigen::VectorXd a = unshifted(p, o, t_new, w), b = unshifted(p, o, t, w);
      const double na = std::sqrt(wdot(a, a, w)), nb = std::sqrt(wdot(b, b, w));
      t_new /= std::max(na, 1e-300);
      cosine = wdot(a, b, w) / std::max(na * nb, 1e-300);
      // a secant turning by the same angle at any step size reflects the previous secant, not this step
      if (!by_alpha && t_is_secant && cosine < 0.8 && ds > 10.0 * opt.ds_min && cosine > last_cosine + 0.02)
        accept = false;
      last_cosine = accept ? -2.0 : cosine;
    }
    if (!accept && by_alpha) {
      h_alpha *= 0.5;
      if (++alpha_failures >= 3) {
        // likely a fold in alpha ahead: hand over to arclength for a while
        alpha_failures = 0;
        hold_arclength = 10;
        ds = std::clamp(0.5 * ds, 10.0 * opt.ds_min, opt.ds_max);
      }
      continue;
    }
    if (!accept) {
      ds *= 0.5;
      if (ds < opt.ds_min) {
        br.termination = Termination::step_underflow;
        if (const HopfPoint* h = matching_hopf(br.points.back(), other_hopfs, opt)) {
          br.termination = Termination::connects_to;
          br.connects_to = h->label;
        }
        break;
      }
      continue;
    }

    {
      // alpha reversals with hysteresis, so noise along the vertical canard segment is not a fold
      const double a = trial.alpha, thr = 1e-6 * std::max(a, 1e-3);
      if (alpha_dir == 0) {
        if (std::abs(a - alpha_ext) > thr) alpha_dir = a > alpha_ext ? 1 : -1, alpha_ext = a;
      } else if ((a - alpha_ext) * alpha_dir > 0.0) {
        alpha_ext = a;
      } else if (std::abs(a - alpha_ext) > thr) {
        ++br.folds;
        alpha_dir = -alpha_dir;
        alpha_ext = a;
      }
    }
    o = trial;
    t = t_new;
    t_is_secant = true;
    ev = std::move(c.ev);
    ph = phase_from(p, o);
    BranchPoint pt = summarize(p, o, ev, c.residual);
    br.points.push_back(pt);

    if (by_alpha) alpha_failures = 0;
    else if (hold_arclength > 0) --hold_arclength;
    if (by_alpha) {
      if (c.iterations <= 6) h_alpha = std::min(h_alpha * 1.5, opt.alpha_step_max);
      else if (c.iterations >= 10) h_alpha *= 0.7;
      const Eigen::VectorXd step = unshifted(p, o, pack(o) - x_prev, w);
      ds = std::clamp(std::sqrt(wdot(step, step, w)), 10.0 * opt.ds_min, opt.ds_max);
    } else if (c.iterations <= 6) {
      ds = std::min(ds * 1.5, opt.ds_max);
    } else if (c.iterations >= 10) {
      ds *= 0.7;
    }

    if (pt.period && *pt.period > opt.T_max) {
      br.termination = Termination::period_overflow;
      break;
    }
    if (o.alpha <= opt.alpha_min || o.alpha >= opt.alpha_max) {
      br.termination = Termination::domain_edge;
      break;
    }
    if (const HopfPoint* h = matching_hopf(pt, other_hopfs, opt)) {
      br.termination = Termination::connects_to;
      br.connects_to = h->label;
      break;
    }
    if (br.folds > opt.max_folds) {
      br.termination = Termination::fold_turnaround;
      break;
    }

    ++since_remesh;
    if (needs_remesh(o, ev, opt) || since_remesh >= 25) {
      std::vector<int> origin;
      PeriodicOrbit fresh = remesh(p, o, ev, opt, &origin);
      const int mn = static_cast<int>(fresh.nodes.size());
      Eigen::VectorXd fix = Eigen::VectorXd::Zero(2 * mn + 2);
      fix[2 * mn + 1] = 1.0;
      const Phase ph_new = phase_from(p, fresh);
      Corrected rc = correct(p, fresh, ph_new, fix, o.alpha, opt, opt.newton_tol);
      if (rc.ok) {
        Eigen::VectorXd t_ref(2 * mn + 2);
        for (int k = 0; k < mn; ++k) t_ref.segment<2>(2 * k) = t.segment<2>(2 * origin[k]);
        t_ref[2 * mn] = t[2 * m];
        t_ref[2 * mn + 1] = t[2 * m + 1];
        try {
          const Eigen::VectorXd wn = arc_weights(pack(fresh));
          Eigen::VectorXd tn = tangent(p, fresh, rc.ev, ph_new, t_ref, wn);
          // orient by period and alpha: interpolated node components are unreliable
          const double along = wn[2 * mn] * tn[2 * mn] * t_ref[2 * mn] + wn[2 * mn + 1] * tn[2 * mn + 1] * t_ref[2 * mn + 1];
          if (along < 0.0 || (along == 0.0 && wdot(tn, t_ref, wn) < 0.0)) tn = -tn;
          o = fresh;
          ph = ph_new;
          ev = std::move(rc.ev);
          t = tn;
          t_is_secant = false;
          m = mn;
          since_remesh = 0;
        } catch (const Error&) {
        }
      }
    }
  }
  if (last_orbit) *last_orbit = o;
  return br;
}

std::vector<Branch> lc_branches(const ModelParams& p, const std::vector<HopfPoint>& hopfs,
                                const LcOptions& opt) {
  std::vector<const HopfPoint*> order;
  for (const auto& h : hopfs) order.push_back(&h);
  std::stable_sort(order.begin(), order.end(), [](auto* x, auto* y) { return x->alpha > y->alpha; });
  std::vector<Branch> out;
  for (const HopfPoint* h : order) {
    const bool reached = std::any_of(out.begin(), out.end(), [&](const Branch& b) {
      return b.termination == Termination::connects_to && b.connects_to == h->label;
    });
    if (reached) continue;
    out.push_back(lc_continue(p, lc_seed_near_hopf(p, *h, opt), hopfs, opt));
  }
  return out;
}

TopologyReport branch_topology(const std::vector<HopfPoint>& hopfs, const std::vector<Branch>& branches,
                               const LcOptions& opt) {
  TopologyReport rep;
  double min_hopf = std::numeric_limits<double>::infinity();
  for (const auto& h : hopfs) min_hopf = std::min(min_hopf, h.alpha);
  auto add_pair = [&](std::string a, std::string b) {
    if (b < a) std::swap(a, b);
    const auto pr = std::make_pair(a, b);
    if (std::find(rep.connected.begin(), rep.connected.end(), pr) == rep.connected.end()) rep.connected.push_back(pr);
  };
  for (const auto& br : branches) {
    if (br.kind != BranchKind::limit_cycle || br.points.empty()) continue;
    const BranchPoint& end = br.points.back();
    if (br.termination == Termination::connects_to) {
      add_pair(br.origin, br.connects_to);
      continue;
    }
    if (const HopfPoint* h = matching_hopf(end, hopfs, opt); h && h->label != br.origin) {
      add_pair(br.origin, h->label);
      continue;
    }
    if (br.termination == Termination::period_overflow || br.termination == Termination::domain_edge ||
        end.alpha < 0.5 * min_hopf) {
      rep.toward_small_alpha.push_back(br.origin);
      continue;
    }
    rep.inconclusive.push_back(br.origin);
  }
  std::sort(rep.connected.begin(), rep.connected.end());
  std::sort(rep.toward_small_alpha.begin(), rep.toward_small_alpha.end());
  rep.toward_small_alpha.erase(std::unique(rep.toward_small_alpha.begin(), rep.toward_small_alpha.end()),
                               rep.toward_small_alpha.end());
  return rep;
}

std::string TopologyReport::summary() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [a, b] : connected) {
    out << (first ? "" : "; ") << a << "-" << b << " connected";
    first = false;
  }
  for (const auto& s : toward_small_alpha) {
    out << (first ? "" : "; ") << s << " toward small alpha";
    first = false;
  }
  for (const auto& s : inconclusive) {
    out << (first ? "" : "; ") << s << " inconclusive";
    first = false;
  }
  return out.str();
}

}  // namespace qlab
