#include <random>

#include "doctest.h"
#include "qlab/error.hpp"
#include "qlab/model.hpp"

using namespace qlab;

namespace {

template <int N, class F>
double max_rel_jacobian_error(F rhs, const double* jac, const double* y0) {
  double worst = 0.0;
  double scale = 0.0;
  for (int k = 0; k < N * N; ++k) scale = std::max(scale, std::abs(jac[k]));
  for (int j = 0; j < N; ++j) {
    double yp[N], ym[N], fp[N], fm[N];
    std::copy(y0, y0 + N, yp);
    std::copy(y0, y0 + N, ym);
    const double h = 1e-6 * std::max(1.0, std::abs(y0[j]));
    yp[j] += h;
    ym[j] -= h;
    rhs(yp, fp);
    rhs(ym, fm);
    for (int i = 0; i < N; ++i) {
      const double fd = (fp[i] - fm[i]) / (2 * h);
      worst = std::max(worst, std::abs(fd - jac[i * N + j]) / std::max(1.0, scale));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("fast and slow time fields differ by epsilon") {
  const ModelParams p = preset_fig3();
  const SlowFastState s{-0.4, 0.7};
  const auto f = core_field(p, s, 1.0, Timescale::fast);
  const auto g = core_field(p, s, p.epsilon * 1.0, Timescale::slow);
  CHECK(g[0] * p.epsilon == doctest::Approx(f[0]));
  CHECK(g[1] * p.epsilon == doctest::Approx(f[1]));
  CHECK(layer_field(p, s, s.p1) == doctest::Approx(f[1]));
}

TEST_CASE("stimulus window converts between clocks") {
  ModelParams p = preset_fig3();
  CHECK(stimulus_at(p.stimulus, 0.02, Timescale::fast, p.epsilon) == 2700.0);
  CHECK(stimulus_at(p.stimulus, 0.04, Timescale::fast, p.epsilon) == 0.0);
  CHECK(stimulus_at(p.stimulus, 0.02 * p.epsilon, Timescale::slow, p.epsilon) == 2700.0);
  CHECK(stimulus_at(p.stimulus, 0.05 * p.epsilon, Timescale::slow, p.epsilon) == 0.0);
  p.stimulus.timescale = Timescale::slow;
  CHECK(stimulus_at(p.stimulus, 0.02, Timescale::slow, p.epsilon) == 2700.0);
  CHECK(stimulus_at(p.stimulus, 0.02 / p.epsilon, Timescale::fast, p.epsilon) == 2700.0);
}

TEST_CASE("rest state is an equilibrium of the full model") {
  const ModelParams p = preset_fig3();
  const auto f = full_field(p, rest_state(p), 10.0);
  for (double v : f) CHECK(std::abs(v) < 1e-14);
  CHECK(axis_reduced_rate(p, -p.b / p.a) == doctest::Approx(0.0));
}

TEST_CASE("analytic Jacobians agree with finite differences") {
  const ModelParams p = preset_fig3();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> P1(-2.5, 3.0), U(-6.0, 1.0), D(0.0, 1.0), F(0.3, 1.0), G(0.0, 1.0),
      V(-60.0, -50.0);
  double worst2 = 0.0, worst6 = 0.0, worst_d = 0.0;
  for (int n = 0; n < 100; ++n) {
    double y2[2] = {P1(rng), U(rng)};
    double j2[4];
    logcoords::core_jacobian(p, y2, j2, Timescale::fast);
    worst2 = std::max(worst2, max_rel_jacobian_error<2>(
                                  [&](const double* y, double* dy) { logcoords::core_rhs(p, 1.0, y, dy, Timescale::fast); },
                                  j2, y2));
    double y6[6] = {P1(rng), U(rng), D(rng), F(rng), G(rng), V(rng)};
    double j6[36];
    logcoords::full_jacobian(p, y6, j6);
    worst6 = std::max(worst6, max_rel_jacobian_error<6>(
                                  [&](const double* y, double* dy) { logcoords::full_rhs(p, 1.0, y, dy); }, j6, y6));
    double yd[2] = {P1(rng), std::exp(U(rng))};
    double jd[4];
    directcoords::core_jacobian(p, yd, jd, Timescale::slow);
    worst_d = std::max(worst_d, max_rel_jacobian_error<2>(
                                    [&](const double* y, double* dy) { directcoords::core_rhs(p, 1.0, y, dy, Timescale::slow); },
                                    jd, yd));
  }
  CHECK(worst2 < 1e-6);
  CHECK(worst6 < 1e-6);
  CHECK(worst_d < 1e-6);
}

TEST_CASE("log coordinates reproduce the direct field") {
  const ModelParams p = preset_fig6();
  const double y[2] = {0.3, std::log(0.8)};
  double dy[2];
  logcoords::core_rhs(p, 5.0, y, dy, Timescale::fast);
  const auto f = core_field(p, {0.3, 0.8}, 5.0, Timescale::fast);
  CHECK(dy[0] == doctest::Approx(f[0]));
  CHECK(dy[1] * 0.8 == doctest::Approx(f[1]));
}

TEST_CASE("invalid parameters are rejected") {
  ModelParams p = preset_fig3();
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = preset_fig3();
  p.b_tilde = 0.5;  // U right of the transcritical point
  CHECK_THROWS_AS(p.validate(), Error);
  p = preset_fig3();
  p.tail.f0 = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_NOTHROW(preset_fig5().validate());
}

}
