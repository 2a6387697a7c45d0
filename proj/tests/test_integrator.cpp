#include <cmath>

#include "doctest.h"
#include "qlab/error.hpp"
#include "qlab/integrator.hpp"
#include "qlab/model.hpp"

using namespace qlab;

TEST_SUITE("integrator") {

TEST_CASE("leak equation matches its closed form") {
  const TailParams k;
  OdeSystem sys;
  sys.dim = 1;
  sys.rhs = [&](double, const double* y, double* dy) { dy[0] = -k.g_L * (y[0] - k.E_L) / k.C; };
  IntegratorOptions o;
  o.rtol = o.atol = 1e-10;
  Eigen::VectorXd y0(1);
  y0 << -40.0;
  const Solution s = integrate(sys, y0, 0.0, 50.0, o);
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const double exact = k.E_L + (-40.0 - k.E_L) * std::exp(-k.g_L * s.t[i] / k.C);
    CHECK(std::abs(s.y[i][0] - exact) < 1e-6);
  }
}

TEST_CASE("stiff linear system with analytic Jacobian") {
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [](double, const double* y, double* dy) {
    dy[0] = -1e4 * (y[0] - std::cos(y[1]));
    dy[1] = 1.0;
  };
  sys.jacobian = [](double, const double* y, double* j) {
    j[0] = -1e4;
    j[1] = -1e4 * std::sin(y[1]);
    j[2] = 0.0;
    j[3] = 0.0;
  };
  IntegratorOptions o;
  o.rtol = o.atol = 1e-8;
  Eigen::VectorXd y0(2);
  y0 << 0.0, 0.0;
  const Solution s = integrate(sys, y0, 0.0, 10.0, o);
  CHECK(s.y_final[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-3));
  CHECK(s.steps < 2000);
}

TEST_CASE("events are located on the dense output") {
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [](double, const double* y, double* dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  IntegratorOptions o;
  o.rtol = o.atol = 1e-12;
  Eigen::VectorXd y0(2);
  y0 << 1.0, 0.0;
  EventFunction up{[](double, const double* y) { return y[0] - 0.5; }, +1, false, 1};
  EventFunction stop{[](double, const double* y) { return y[1] + 0.5; }, 0, true, 2};
  const Solution s = integrate(sys, y0, 0.0, 20.0, o, {up, stop});
  // y1 = -sin t falls through -0.5 at pi / 6; cos rises through 0.5 at 2 pi - pi / 3
  REQUIRE(s.stopped_by_event);
  CHECK(std::abs(s.t_final - M_PI / 6) < 1e-10);
  bool saw_up = false;
  for (const auto& e : s.events)
    if (e.id == 1) saw_up = true;
  CHECK_FALSE(saw_up);
  const Solution s2 = integrate(sys, y0, 0.0, 7.0, o, {up});
  REQUIRE(s2.events.size() == 1);
  CHECK(std::abs(s2.events[0].t - (2 * M_PI - M_PI / 3)) < 1e-9);
}

TEST_CASE("breakpoints are hit exactly") {
  OdeSystem sys;
  sys.dim = 1;
  sys.rhs = [](double t, const double*, double* dy) { dy[0] = (t >= 0.3 && t < 0.7) ? 1.0 : 0.0; };
  IntegratorOptions o;
  o.breakpoints = {0.3, 0.7};
  Eigen::VectorXd y0(1);
  y0 << 0.0;
  const Solution s = integrate(sys, y0, 0.0, 2.0, o);
  CHECK(std::abs(s.y_final[0] - 0.4) < 1e-9);
  bool has03 = false, has07 = false;
  for (double t : s.t) {
    has03 |= t == 0.3;
    has07 |= t == 0.7;
  }
  CHECK(has03);
  CHECK(has07);
}

TEST_CASE("self-convergence under tolerance halving") {
  const ModelParams p = preset_fig6();
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [&](double t, const double* y, double* dy) { logcoords::core_rhs(p, t, y, dy, Timescale::fast); };
  sys.jacobian = [&](double, const double* y, double* j) { logcoords::core_jacobian(p, y, j, Timescale::fast); };
  Eigen::VectorXd y0(2);
  y0 << -0.3, std::log(0.5);
  for (double tol : {1e-7, 1e-8, 1e-9}) {
    IntegratorOptions a, b;
    a.rtol = a.atol = tol;
    b.rtol = b.atol = tol / 2;
    const auto ya = integrate(sys, y0, 0.0, 30.0, a).y_final;
    const auto yb = integrate(sys, y0, 0.0, 30.0, b).y_final;
    CHECK((ya - yb).cwiseAbs().maxCoeff() < 10 * tol);
  }
}

TEST_CASE("step size underflow is reported") {
  OdeSystem sys;
  sys.dim = 1;
  sys.rhs = [](double, const double* y, double* dy) { dy[0] = y[0] * y[0]; };
  Eigen::VectorXd y0(1);
  y0 << 1.0;
  try {
    integrate(sys, y0, 0.0, 2.0, {});
    FAIL("expected an integrator failure");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::StepSizeUnderflow || e.kind() == ErrorKind::MaxStepsExceeded));
  }
}

}
