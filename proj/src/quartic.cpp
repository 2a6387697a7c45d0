#include "qlab/quartic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qlab/error.hpp"

namespace qlab {

std::string_view to_string(FoldKind kind) noexcept {
  return kind == FoldKind::local_min ? "local_min" : "local_max";
}

std::string_view to_string(BranchStability s) noexcept {
  switch (s) {
    case BranchStability::attracting: return "attracting";
    case BranchStability::repelling: return "repelling";
    case BranchStability::fold: return "fold";
  }
  return "?";
}

void QuarticSpec::validate() const {
  if (!(Q > 0.0) || !std::isfinite(Q)) {
    throw Error(ErrorKind::InvalidInput, "quartic: Q must be positive");
  }
  double lead = 1.0;
  for (double ci : c) {
    if (ci == 0.0 || !std::isfinite(ci)) {
      throw Error(ErrorKind::InvalidInput, "quartic: every c_i must be nonzero");
    }
    lead *= ci;
  }
  for (double ri : r) {
    if (!std::isfinite(ri)) throw Error(ErrorKind::InvalidInput, "quartic: r_i not finite");
  }
  // M-shape: two minima around one maximum needs a positive leading coefficient.
  if (lead < 0.0) {
    throw Error(ErrorKind::InvalidInput,
                "quartic: product of c_i must be positive (M-shaped nullcline)");
  }
  gamma_zeros(*this);
}

std::array<double, 5> QuarticSpec::coefficients() const {
  std::array<double, 5> k{Q, 0.0, 0.0, 0.0, 0.0};
  int deg = 0;
  for (int i = 0; i < 4; ++i) {
    // multiply the running polynomial by (c_i p + r_i)
    for (int j = deg + 1; j >= 0; --j) {
      const double from_lower = j > 0 ? k[j - 1] * c[i] : 0.0;
      k[j] = k[j] * r[i] + from_lower;
    }
    ++deg;
  }
  return k;
}

double gamma_eval(const QuarticSpec& q, double p2) noexcept {
  double v = q.Q;
  for (int i = 0; i < 4; ++i) v *= q.c[i] * p2 + q.r[i];
  return v;
}

double gamma_deriv(const QuarticSpec& q, double p2) noexcept {
  std::array<double, 4> f{};
  for (int i = 0; i < 4; ++i) f[i] = q.c[i] * p2 + q.r[i];
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    double term = q.c[i];
    for (int j = 0; j < 4; ++j) {
      if (j != i) term *= f[j];
    }
    sum += term;
  }
  return q.Q * sum;
}

double gamma_second_deriv(const QuarticSpec& q, double p2) noexcept {
  std::array<double, 4> f{};
  for (int i = 0; i < 4; ++i) f[i] = q.c[i] * p2 + q.r[i];
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      double term = q.c[i] * q.c[j];
      for (int k = 0; k < 4; ++k) {
        if (k != i && k != j) term *= f[k];
      }
      sum += term;
    }
  }
  return q.Q * sum;
}

std::array<double, 4> gamma_zeros(const QuarticSpec& q) {
  std::array<double, 4> z{};
  for (int i = 0; i < 4; ++i) {
    if (q.c[i] == 0.0) throw Error(ErrorKind::InvalidInput, "quartic: c_i = 0");
    z[i] = -q.r[i] / q.c[i];
    if (z[i] == 0.0) z[i] = 0.0;  // normalise -0
  }
  std::sort(z.begin(), z.end());
  for (int i = 0; i < 3; ++i) {
    const double scale = std::max(1.0, std::abs(z[i + 1]));
    if (z[i + 1] - z[i] <= 1e-12 * scale) {
      std::ostringstream msg;
      msg << "quartic: repeated zero at p2 = " << z[i];
      throw Error(ErrorKind::DuplicateZero, msg.str());
    }
  }
  if (z[0] < 0.0) {
    std::ostringstream msg;
    msg << "quartic: negative zero at p2 = " << z[0];
    throw Error(ErrorKind::NonNegativityViolation, msg.str());
  }
  return z;
}

double gamma_deriv_scale(const QuarticSpec& q) noexcept {
  const auto k = q.coefficients();
  double s = 0.0;
  for (int j = 1; j <= 4; ++j) s = std::max(s, std::abs(j * k[j]));
  return s;
}

namespace {

// Safeguarded Newton on Gamma' inside a sign-changing bracket.
double refine_critical_point(const QuarticSpec& q, double lo, double hi, double tol) {
  double flo = gamma_deriv(q, lo);
  double fhi = gamma_deriv(q, hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw Error(ErrorKind::FoldNotFound, "quartic: Gamma' does not change sign between zeros");
  }
  if (flo > 0.0) std::swap(lo, hi);  // keep gamma_deriv(lo) < 0
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = gamma_deriv(q, x);
    if (std::abs(fx) <= tol) return x;
    if (fx < 0.0) lo = x; else hi = x;
    const double d2 = gamma_second_deriv(q, x);
    double next = d2 != 0.0 ? x - fx / d2 : 0.5 * (lo + hi);
    const double a = std::min(lo, hi), b = std::max(lo, hi);
    if (!(next > a && next < b)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      return next;
    }
    x = next;
  }
  throw Error(ErrorKind::FoldNotFound, "quartic: fold refinement did not converge");
}

}  // namespace

std::array<FoldPoint, 3> fold_points(const QuarticSpec& q) {
  const auto z = gamma_zeros(q);
  const double tol = 1e-12 * gamma_deriv_scale(q);
  std::array<FoldPoint, 3> folds{};
  for (int i = 0; i < 3; ++i) {
    const double p2 = refine_critical_point(q, z[i], z[i + 1], tol);
    folds[i].p2 = p2;
    folds[i].p1 = gamma_eval(q, p2);
    folds[i].kind = gamma_second_deriv(q, p2) > 0.0 ? FoldKind::local_min : FoldKind::local_max;
  }
  return folds;
}

TcPoint tc_point(const QuarticSpec& q, double a_tilde, double b_tilde) noexcept {
  TcPoint tc;
  tc.p1 = q.Q * q.r[0] * q.r[1] * q.r[2] * q.r[3];
  tc.p2 = 0.0;
  tc.valid = a_tilde != 0.0 && tc.p1 >= -b_tilde / a_tilde;
  return tc;
}

BranchStability fast_branch_stability(const QuarticSpec& q, double p2, double tol) {
  if (!(p2 > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "fast_branch_stability: p2 must be positive");
  }
  const double lin = -p2 * gamma_deriv(q, p2);
  if (std::abs(lin) < tol) return BranchStability::fold;
  return lin < 0.0 ? BranchStability::attracting : BranchStability::repelling;
}

}  // namespace qlab
