#pragma once

// Reference computations written independently of the library code paths.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double gamma(const std::array<double, 4>& c, const std::array<double, 4>& r, double Q, double p) {
  double v = Q;
  for (int i = 0; i < 4; ++i) v *= c[i] * p + r[i];
  return v;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Critical points of Gamma by bisection on a central difference of the product form.
inline std::vector<double> folds(const std::array<double, 4>& c, const std::array<double, 4>& r, double Q) {
  auto d = [&](double p) {
    const double h = 1e-6;
    return (gamma(c, r, Q, p + h) - gamma(c, r, Q, p - h)) / (2 * h);
  };
  std::vector<double> out;
  const int n = 4000;
  const double hi = 3.0;
  for (int i = 0; i < n; ++i) {
    const double x0 = hi * i / n, x1 = hi * (i + 1) / n;
    if ((d(x0) < 0) != (d(x1) < 0)) out.push_back(bisect(d, x0, x1));
  }
  return out;
}

// Composite Simpson rule.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

// Exit point of the integral of (x - g0)/((a x + b)(at x + bt)) from p10, via Simpson + bisection.
inline double exit_point(double a, double b, double at, double bt, double g0, double p10, double hi) {
  auto f = [&](double x) { return (x - g0) / ((a * x + b) * (at * x + bt)); };
  auto F = [&](double y) { return simpson(f, p10, y, 4000); };
  return bisect(F, g0 + 1e-12, hi);
}

}  // namespace oracle
