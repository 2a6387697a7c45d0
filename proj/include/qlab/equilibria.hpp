#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qlab/model.hpp"

namespace qlab {

enum class EquilibriumLabel { S, U, U_tilde };
enum class Stability { stable, unstable, non_hyperbolic };

std::string_view to_string(EquilibriumLabel label) noexcept;
std::string_view to_string(Stability s) noexcept;

struct Equilibrium {
  SlowFastState location;
  EquilibriumLabel label = EquilibriumLabel::S;
  std::array<std::complex<double>, 2> eigenvalues{};
  Stability classification = Stability::stable;
};

/// Analytic Jacobian of the fast-time planar field (stimulus off) in (p1, p2).
Eigen::Matrix2d jacobian(const ModelParams& p, SlowFastState s);

std::array<std::complex<double>, 2> eigenvalues_2x2(const Eigen::Matrix2d& m);

/// Eigenvalues and stability class of an equilibrium. Throws NotAnEquilibrium when
/// the field does not vanish at `location` to `residual_tol`.
Equilibrium classify_equilibrium(const ModelParams& p, SlowFastState location,
                                 EquilibriumLabel label, double residual_tol = 1e-10);

/// S = (-b/a, 0), U = (-b~/a~, 0) and U~ = (Gamma(alpha), alpha). Throws
/// AssumptionViolated when an oblique line of the p1-nullcline meets the quartic.
std::vector<Equilibrium> find_equilibria(const ModelParams& p);

/// Checks that {p2 = a p1 + b} and {p2 = a~ p1 + b~} miss {p1 = Gamma(p2)} for
/// p2 in (0, p2_max]; throws AssumptionViolated otherwise.
void check_line_quartic_separation(const ModelParams& p);

}  // namespace qlab
