#include "qlab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qlab/error.hpp"

namespace qlab {

std::string_view to_string(EquilibriumLabel label) noexcept {
  switch (label) {
    case EquilibriumLabel::S: return "S";
    case EquilibriumLabel::U: return "U";
    case EquilibriumLabel::U_tilde: return "U_tilde";
  }
  return "?";
}

std::string_view to_string(Stability s) noexcept {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::non_hyperbolic: return "non_hyperbolic";
  }
  return "?";
}

Eigen::Matrix2d jacobian(const ModelParams& p, SlowFastState s) {
  ModelParams quiet = p;
  quiet.stimulus.V = 0.0;
  const double y[2] = {s.p1, s.p2};
  double j[4];
  directcoords::core_jacobian(quiet, y, j, Timescale::fast);
  Eigen::Matrix2d m;
  m << j[0], j[1], j[2], j[3];
  return m;
}

std::array<std::complex<double>, 2> eigenvalues_2x2(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = 0.25 * tr * tr - det;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    // avoid cancellation in the smaller root
    const double big = 0.5 * tr + (tr >= 0.0 ? root : -root);
    const double small = big != 0.0 ? det / big : 0.0;
    std::array<std::complex<double>, 2> ev{std::complex<double>(std::min(big, small)),
                                           std::complex<double>(std::max(big, small))};
    return ev;
  }
  const double im = std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, -im), std::complex<double>(0.5 * tr, im)};
}

Equilibrium classify_equilibrium(const ModelParams& p, SlowFastState location,
                                 EquilibriumLabel label, double residual_tol) {
  ModelParams quiet = p;
  quiet.stimulus.V = 0.0;
  const auto f = core_field(quiet, location, 0.0, Timescale::fast);
  const double residual = std::hypot(f[0], f[1]);
  if (!(residual <= residual_tol)) {
    std::ostringstream msg;
    msg << "classify_equilibrium: residual " << residual << " at (" << location.p1 << ", "
        << location.p2 << ")";
    throw Error(ErrorKind::NotAnEquilibrium, msg.str());
  }
  Equilibrium eq;
  eq.location = location;
  eq.label = label;
  eq.eigenvalues = eigenvalues_2x2(jacobian(p, location));
  const double re0 = eq.eigenvalues[0].real(), re1 = eq.eigenvalues[1].real();
  constexpr double kHyperbolicTol = 1e-10;
  if (std::min(std::abs(re0), std::abs(re1)) < kHyperbolicTol) {
    eq.classification = Stability::non_hyperbolic;
  } else if (re0 < 0.0 && re1 < 0.0) {
    eq.classification = Stability::stable;
  } else {
    eq.classification = Stability::unstable;
  }
  return eq;
}

void check_line_quartic_separation(const ModelParams& p) {
  const auto zeros = gamma_zeros(p.quartic);
  const double p2_max = 2.0 * zeros[3] + 2.0;
  constexpr int kSamples = 4000;
  const std::array<std::pair<double, double>, 2> lines{{{p.a, p.b}, {p.a_tilde, p.b_tilde}}};
  for (const auto& [slope, offset] : lines) {
    // p1 on the line at height p2 is (p2 - offset) / slope
    auto gap = [&](double p2) { return gamma_eval(p.quartic, p2) - (p2 - offset) / slope; };
    double prev = gap(p2_max / kSamples);
    for (int i = 1; i <= kSamples; ++i) {
      const double p2 = p2_max * i / kSamples;
      const double cur = gap(p2);
      if (cur == 0.0 || (cur > 0.0) != (prev > 0.0)) {
        std::ostringstream msg;
        msg << "line p2 = " << slope << " p1 + " << offset << " meets the quartic near p2 = "
            << p2;
        throw Error(ErrorKind::AssumptionViolated, msg.str());
      }
      prev = cur;
    }
  }
}

std::vector<Equilibrium> find_equilibria(const ModelParams& p) {
  check_line_quartic_separation(p);
  std::vector<Equilibrium> out;
  out.push_back(classify_equilibrium(p, {-p.b / p.a, 0.0}, EquilibriumLabel::S));
  out.push_back(classify_equilibrium(p, {-p.b_tilde / p.a_tilde, 0.0}, EquilibriumLabel::U));
  out.push_back(classify_equilibrium(p, {gamma_eval(p.quartic, p.alpha), p.alpha},
                                     EquilibriumLabel::U_tilde));
  return out;
}

}  // namespace qlab
