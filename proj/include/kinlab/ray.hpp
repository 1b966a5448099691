#pragma once

// Exit-time ray tracing on implicit domains. Backward/forward exit times are the sup of travel
// times keeping the open segment inside the domain; a tangential boundary touch therefore ends
// the segment. The tracer marches g(tau) = F(x + tau*d) with parabola-safe steps (uses g and g'
// against the global Hessian bound, so a step can never jump across the zero set), then brackets
// and bisects. Near-tangent approaches get an explicit vertex analysis so grazing exits are
// neither missed nor spuriously detected.

#include <cmath>
#include <cstdint>
#include <optional>

#include "kinlab/core.hpp"
#include "kinlab/geom.hpp"

namespace kinlab {

enum class RayVerdict { Exit, Never, Touch };

struct ExitRecord {
  double t = kInf;       // exit time for the given velocity, +inf if the ray never exits
  double arclength = kInf;
  Vec3 x_exit = Vec3::Zero();
  bool on_boundary_start = false;  // query point was on the boundary and the ray leaves at t = 0
  bool tangential_touch = false;   // exit happens at a tangential touch, not a transversal cross
  bool never_exits = false;
  bool path_capped = false;        // "never" was declared at the path cap, not proved
};

namespace raydetail {

struct MarchResult {
  RayVerdict verdict;
  double arc;
  bool capped = false;
};

// March from a point with g(start_arc) < 0 until the first zero of g; exact bisection at the end.
template <class G, class S>
MarchResult march_from_inside(const G& g, const S& gslope, double start_arc, double g0, double H,
                              double cap_step, double diam, double path_cap) {
  const double h_floor = 1e-7 * diam;
  const double h_min = 1e-9 * diam;
  const double bisect_tol = 1e-12 * diam;
  const double g_touch = 1e-12 * diam;  // vertex heights above -g_touch count as touches

  auto bisect = [&](double a, double b) {
    // invariant: g(a) < 0 <= g(b)
    while (b - a > bisect_tol) {
      double m = 0.5 * (a + b);
      (g(m) < 0 ? a : b) = m;
    }
    return 0.5 * (a + b);
  };

  double tau = start_arc, gv = g0, sv = gslope(start_arc);
  for (std::int64_t it = 0; it < 1000000; ++it) {
    if (tau > path_cap) return {RayVerdict::Never, kInf, true};
    // Largest h with g + s h + H h^2/2 guaranteed <= 0, times a safety factor.
    double hsafe = 0.8 * (-sv + std::sqrt(sv * sv + 2.0 * H * (-gv))) / H;
    if (hsafe >= h_floor || sv <= 0.0) {
      double h = std::min(std::max(hsafe, h_floor), cap_step);
      double tau2 = tau + h;
      double g2 = g(tau2);
      if (g2 >= 0.0) return {RayVerdict::Exit, bisect(tau, tau2)};
      tau = tau2;
      gv = g2;
      sv = gslope(tau2);
      continue;
    }
    // Rising toward the surface with a tiny safe step: resolve the local maximum explicitly.
    for (int hp = 0; hp < 80; ++hp) {
      double u = std::min(std::max(sv / H, 2.0 * h_min), cap_step);
      double tau2 = tau + u;
      double g2 = g(tau2), s2 = gslope(tau2);
      if (g2 >= 0.0) return {RayVerdict::Exit, bisect(tau, tau2)};
      if (s2 <= 0.0) {
        double curv = (s2 - sv) / u;  // < 0 across a maximum
        double vertex = curv < -1e-300 ? tau2 - s2 / curv : tau2;
        double gmax = curv < -1e-300 ? g2 - 0.5 * s2 * s2 / curv : g2;
        if (gmax > -g_touch) return {RayVerdict::Touch, vertex};
        tau = tau2;
        gv = g2;
        sv = s2;
        break;  // passed below the hump, resume normal marching
      }
      tau = tau2;
      gv = g2;
      sv = s2;
    }
  }
  throw NumericalMiss("exit march: step limit exhausted");
}

}  // namespace raydetail

// Exit along unit direction d from x with F(x) <= boundary tolerance. Returns arclength.
inline ExitRecord exit_along(const Domain& dom, const Vec3& x, const Vec3& d_unit) {
  const double diam = dom.diameter();
  const double H = std::max(dom.hess_bound(), 1e-6);
  // The parabola majorant keeps any step below hsafe from silently crossing the zero set, so
  // the cap only trades hump-vertex resolution for speed. It must be large enough that the
  // million-step budget can out-run path_cap on domains with genuinely non-exiting rays.
  const double cap_step = 0.1 * diam;
  const double path_cap = 5e4 * diam;
  const double tol_g0 = 1e-9 * diam * dom.grad_bound();

  auto g = [&](double tau) { return dom.F(x + tau * d_unit); };
  auto gs = [&](double tau) { return dom.gradF(x + tau * d_unit).dot(d_unit); };

  ExitRecord rec;
  double g0 = g(0.0);
  if (g0 > tol_g0) throw NotOnBoundary("exit_along: start point outside the closed domain");

  double start = 0.0, gstart = g0;
  if (g0 >= -tol_g0) {
    // Boundary start: leave immediately unless the ray points inward (transversally or by
    // concave tangency).
    rec.on_boundary_start = true;
    double s0 = gs(0.0);
    double slope_tol = 1e-10 * dom.grad_bound();
    if (s0 > slope_tol) {
      rec.t = 0.0;
      rec.arclength = 0.0;
      rec.x_exit = x;
      return rec;
    }
    if (std::abs(s0) <= slope_tol) {
      double curv = d_unit.dot(dom.hessF(x) * d_unit);
      if (curv >= -1e-9 * H) {  // flat or convex tangency: the ray does not enter
        rec.t = 0.0;
        rec.arclength = 0.0;
        rec.x_exit = x;
        rec.tangential_touch = true;
        return rec;
      }
    }
    // Inward: hop past the boundary shell, shrinking if the hop overshoots.
    double hop = 1e-5 * diam;
    for (int k = 0; k < 3 && g(start + hop) >= 0.0; ++k) hop *= 0.1;
    if (g(start + hop) >= 0.0) {
      rec.t = 0.0;
      rec.arclength = 0.0;
      rec.x_exit = x;
      rec.tangential_touch = true;
      return rec;
    }
    start += hop;
    gstart = g(start);
  }

  auto res = raydetail::march_from_inside(g, gs, start, gstart, H, cap_step, diam, path_cap);
  if (res.verdict == RayVerdict::Never) {
    rec.never_exits = true;
    rec.path_capped = res.capped;
    return rec;
  }
  rec.arclength = res.arc;
  rec.x_exit = x + res.arc * d_unit;
  rec.tangential_touch = (res.verdict == RayVerdict::Touch);
  return rec;
}

// Backward exit: largest time tau with x - s v inside for all 0 < s < tau.
inline ExitRecord never_record() {
  ExitRecord rec;
  rec.never_exits = true;
  return rec;
}

inline ExitRecord backward_exit(const Domain& dom, const Vec3& x, const Vec3& v) {
  double speed = v.norm();
  if (speed < 1e-300) return never_record();  // v = 0 never reaches the boundary
  ExitRecord rec = exit_along(dom, x, -v / speed);
  if (!rec.never_exits) rec.t = rec.arclength / speed;
  return rec;
}

// Forward exit: largest time tau with x + s v inside for all 0 < s < tau.
inline ExitRecord forward_exit(const Domain& dom, const Vec3& x, const Vec3& v) {
  double speed = v.norm();
  if (speed < 1e-300) return never_record();
  ExitRecord rec = exit_along(dom, x, v / speed);
  if (!rec.never_exits) rec.t = rec.arclength / speed;
  return rec;
}

// Fast path for estimator loops: closed form when the domain provides one, marching otherwise.
inline ExitRecord exit_fast(const Domain& dom, const Vec3& x, const Vec3& v, bool backward) {
  double speed = v.norm();
  if (speed < 1e-300) return never_record();
  Vec3 d = (backward ? -1.0 : 1.0) * v / speed;
  if (auto arc = dom.exit_arclength_closed_form(x, d)) {
    ExitRecord rec;
    rec.arclength = *arc;
    if (std::isinf(*arc)) {
      rec.never_exits = true;
      return rec;
    }
    rec.t = *arc / speed;
    rec.x_exit = x + *arc * d;
    rec.on_boundary_start = (*arc == 0.0);
    return rec;
  }
  return backward ? backward_exit(dom, x, v) : forward_exit(dom, x, v);
}

// Fixed-step oracle: dense march at the given step, bisect on the first sign change.
inline std::optional<double> dense_exit_arclength(const Domain& dom, const Vec3& x,
                                                  const Vec3& d_unit, double step,
                                                  double max_arc) {
  double prev = 0.0, gprev = dom.F(x);
  if (gprev >= 0.0) return 0.0;
  for (double tau = step; tau <= max_arc; tau += step) {
    double gv = dom.F(x + tau * d_unit);
    if (gv >= 0.0) {
      double a = prev, b = tau;
      while (b - a > 1e-13 * dom.diameter()) {
        double m = 0.5 * (a + b);
        (dom.F(x + m * d_unit) < 0 ? a : b) = m;
      }
      return 0.5 * (a + b);
    }
    prev = tau;
    gprev = gv;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------------------------
// Derivatives of the backward exit data (t_b, x_b) in (x, v), valid away from grazing.

struct ExitDerivatives {
  double t_b;
  Vec3 x_b;
  Vec3 dt_dx;   // gradient of t_b in x
  Vec3 dt_dv;   // gradient of t_b in v
  Mat3 dxb_dx;  // rows: components of x_b, columns: x derivatives
  Mat3 dxb_dv;
};

inline ExitDerivatives exit_derivatives(const Domain& dom, const Vec3& x, const Vec3& v,
                                        double tol_nd = 1e-3) {
  ExitRecord rec = backward_exit(dom, x, v);
  if (rec.never_exits) throw GrazingRay("exit_derivatives: ray never reaches the boundary");
  Vec3 n = dom.outward_normal(rec.x_exit);
  double denom = v.dot(n);
  if (std::abs(denom) < tol_nd * v.norm())
    throw GrazingRay("exit_derivatives: grazing ray, |n.v| below threshold");
  ExitDerivatives d;
  d.t_b = rec.t;
  d.x_b = rec.x_exit;
  // Implicit differentiation of F(x - t_b v) = 0; backward exit has x_b = x - t_b v and
  // the denominator v.n(x_b) is negative for a transversal backward exit.
  d.dt_dx = n / denom;
  d.dt_dv = -rec.t * n / denom;
  d.dxb_dx = Mat3::Identity() - v * (n.transpose() / denom);
  d.dxb_dv = -rec.t * (Mat3::Identity() - v * (n.transpose() / denom));
  return d;
}

// ---------------------------------------------------------------------------------------------
// Boundary phase classification by the sign of n.v, with tangential rays split by the normal
// curvature along the ray (concave tangencies generate interior grazing chords).

enum class GrazeClass { Incoming, Outgoing, GrazingConvex, GrazingConcave, GrazingFlat };

inline GrazeClass grazing_classify(const Domain& dom, const Vec3& x, const Vec3& v,
                                   double tol_g = 1e-8) {
  double speed = v.norm();
  if (speed < 1e-300) return GrazeClass::GrazingFlat;
  Vec3 n = dom.outward_normal(x);
  double mu = n.dot(v) / speed;
  if (mu > tol_g) return GrazeClass::Outgoing;
  if (mu < -tol_g) return GrazeClass::Incoming;
  Vec3 d = v / speed;
  double curv = d.dot(dom.hessF(x) * d) / dom.gradF(x).norm();
  double flat_tol = 1e-6 / dom.diameter();
  if (curv > flat_tol) return GrazeClass::GrazingConvex;
  if (curv < -flat_tol) return GrazeClass::GrazingConcave;
  return GrazeClass::GrazingFlat;
}

}  // namespace kinlab
