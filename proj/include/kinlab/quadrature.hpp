#pragma once

// 1-D adaptive Simpson quadrature and fixed Gauss-Legendre nodes for surface integrals.

#include <array>
#include <cmath>

#include "kinlab/core.hpp"

namespace kinlab {

namespace detail {
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureFailure("adaptive Simpson: depth exhausted");
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson with mixed absolute/relative tolerance; throws QuadratureFailure if the
// requested tolerance is unreachable within the depth limit. The interval is pre-split into four
// panels so a symmetric integrand cannot fool the first error estimate.
template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-8, double abs_floor = 1e-14,
                 int max_depth = 48) {
  if (a == b) return 0.0;
  double coarse = 0.0;
  {
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    coarse = (b - a) / 6.0 * (fa + 4 * fm + fb);
  }
  double tol = std::max(abs_floor, rel_tol * std::abs(coarse)) / 4.0;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    double pa = a + (b - a) * k / 4.0;
    double pb = a + (b - a) * (k + 1) / 4.0;
    double fa = f(pa), fm = f(0.5 * (pa + pb)), fb = f(pb);
    double whole = (pb - pa) / 6.0 * (fa + 4 * fm + fb);
    total += detail::simpson_rec(f, pa, pb, fa, fm, fb, whole, tol, max_depth);
  }
  return total;
}

// 16-point Gauss-Legendre on [-1,1].
struct Gauss16 {
  static constexpr std::array<double, 8> x = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
      0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
  static constexpr std::array<double, 8> w = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
      0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
  // f over [a,b].
  template <class F>
  static double line(const F& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
    for (int i = 0; i < 8; ++i) s += w[i] * (f(c + h * x[i]) + f(c - h * x[i]));
    return h * s;
  }
  // f over [a1,b1]x[a2,b2].
  template <class F>
  static double square(const F& f, double a1, double b1, double a2, double b2) {
    return line([&](double u) { return line([&](double t) { return f(u, t); }, a2, b2); }, a1, b1);
  }
};

}  // namespace kinlab
