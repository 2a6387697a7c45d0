#pragma once

#include <array>
#include <string_view>

namespace qlab {

/// Fully factored quartic Gamma(p2) = Q * prod_i (c_i p2 + r_i), the p2-dependent
/// part of the fast nullcline p1 = Gamma(p2).
struct QuarticSpec {
  double Q = 0.05;
  std::array<double, 4> c{-3.0, -3.0, -3.0, -3.0};
  std::array<double, 4> r{6.4, 4.0, 2.0, 0.0};

  /// Throws Error(InvalidInput / DuplicateZero / NonNegativityViolation) when the
  /// spec does not describe an M-shaped quartic with four distinct zeros >= 0.
  void validate() const;

  /// Monomial coefficients k[0] + k[1] p + ... + k[4] p^4.
  std::array<double, 5> coefficients() const;
};

enum class FoldKind { local_min, local_max };
std::string_view to_string(FoldKind kind) noexcept;

struct FoldPoint {
  double p2 = 0.0;
  double p1 = 0.0;
  FoldKind kind = FoldKind::local_min;
};

struct TcPoint {
  double p1 = 0.0;
  double p2 = 0.0;
  bool valid = false;  // Gamma(0) >= -b_tilde / a_tilde
};

enum class BranchStability { attracting, repelling, fold };
std::string_view to_string(BranchStability s) noexcept;

double gamma_eval(const QuarticSpec& q, double p2) noexcept;
double gamma_deriv(const QuarticSpec& q, double p2) noexcept;
double gamma_second_deriv(const QuarticSpec& q, double p2) noexcept;

/// Zeros -r_i/c_i in ascending order.
std::array<double, 4> gamma_zeros(const QuarticSpec& q);

/// The three critical points of Gamma, one strictly between each pair of
/// consecutive zeros, in increasing p2.
std::array<FoldPoint, 3> fold_points(const QuarticSpec& q);

/// Largest |coefficient| of the cubic Gamma'; the natural scale for fold residuals.
double gamma_deriv_scale(const QuarticSpec& q) noexcept;

TcPoint tc_point(const QuarticSpec& q, double a_tilde, double b_tilde) noexcept;

/// Stability of the quartic branch of the layer equation at height p2 > 0, read off
/// the sign of the linearization -p2 * Gamma'(p2).
BranchStability fast_branch_stability(const QuarticSpec& q, double p2, double tol = 1e-9);

}  // namespace qlab
