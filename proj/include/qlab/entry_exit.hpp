#pragma once

#include <string_view>

#include "qlab/model.hpp"

namespace qlab {

enum class ExitMethod { closed_form, quadrature, simulation };
std::string_view to_string(ExitMethod m) noexcept;

struct EntryExitResult {
  double p10 = 0.0;
  double p11 = 0.0;
  ExitMethod method = ExitMethod::closed_form;
  double residual = 0.0;
};

struct EntryExitOptions {
  /// Upper end of the exit search; 0 selects 10x the largest fold |p1|.
  double p11_max = 0.0;
  /// Absolute root tolerance is root_rtol * max(1, |p11|).
  double root_rtol = 1e-14;
};

/// Integral of (x - Gamma(0)) / ((a x + b)(a~ x + b~)) from p10 to p11 via the
/// partial-fraction antiderivative (closed_form) or adaptive Gauss-Kronrod
/// quadrature (quadrature). Throws PoleInInterval, InvalidInput when a b~ = a~ b.
double exit_integral(const ModelParams& p, double p10, double p11,
                     ExitMethod method = ExitMethod::closed_form);

/// Exit point p11 >= Gamma(0) solving exit_integral(p10, p11) = 0 by bracketed
/// root search. method selects how the integral is evaluated.
EntryExitResult exit_point(const ModelParams& p, double p10,
                           ExitMethod method = ExitMethod::closed_form,
                           const EntryExitOptions& opt = {});

struct SimulatedExitOptions {
  double t_max = 1e6;      // fast time
  double p1_blowup = 1e8;  // |p1| beyond this counts as no exit
  double rtol = 1e-10;
  double atol = 1e-10;
};

/// Integrates the unstimulated fast-time system from (p10, delta) until p2 climbs
/// back through delta. When p2 grows from the start the exit is p10 itself.
EntryExitResult simulated_exit(const ModelParams& p, double p10, double delta,
                               const SimulatedExitOptions& opt = {});

/// True iff the exit lies beyond the p1 value of the local-maximum fold of Gamma.
bool upper_branch_accessible(const ModelParams& p, double p10, const EntryExitOptions& opt = {});

}  // namespace qlab
