#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "kinlab/core.hpp"
#include "kinlab/geom.hpp"

namespace kinlab {

// Picks the coordinate axis least aligned with n and returns an orthonormal
// tangent pair (t1, t2) with t1 x t2 = -n. Deterministic: ties break toward
// the lowest axis index so frames are reproducible across runs.
inline void tangent_frame(const Vec3& n, Vec3& t1, Vec3& t2) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) < std::abs(n[k])) k = i;
  t1 = Vec3::Unit(k).cross(n).normalized();
  t2 = (-n).cross(t1);
}

// Local graph chart of the boundary: the patch is the graph
//   x = p0 + z1 e1 + z2 e2 + eta(z1, z2) e3
// over (z1, z2) in (-delta, delta)^2, where e3 = -n(p0) points into the
// domain and the domain side is z3 > eta. Valid only if the slope stays
// below 1/8, which construction verifies on a grid.
class BoundaryChart {
 public:
  BoundaryChart(const Domain* dom, const Vec3& p0, const Vec3& e1,
                const Vec3& e2, const Vec3& e3, double delta, double h_range)
      : dom_(dom), p0_(p0), e1_(e1), e2_(e2), e3_(e3), delta_(delta),
        h_range_(h_range) {}

  const Vec3& origin() const { return p0_; }
  const Vec3& t1() const { return e1_; }
  const Vec3& t2() const { return e2_; }
  const Vec3& inward() const { return e3_; }
  double delta() const { return delta_; }

  // Measured on the validation grid (with a safety factor for off-grid
  // points); slope_max <= 1/8 is part of chart validity.
  double slope_max = 0.0;   // sup |d1 eta| + |d2 eta|
  double eta_c2 = 0.0;      // sup |d11| + |d22| + |d12|
  double kappa_concave = 0.0;  // sup of most negative Hessian eigenvalue, >= 0

  Vec3 embed(double z1, double z2, double z3) const {
    return p0_ + z1 * e1_ + z2 * e2_ + z3 * e3_;
  }
  Vec3 coords(const Vec3& x) const {
    Vec3 d = dom_->min_image(x, p0_);
    return Vec3(d.dot(e1_), d.dot(e2_), d.dot(e3_));
  }
  bool in_patch(double z1, double z2, double margin = 0.0) const {
    return std::abs(z1) < delta_ - margin && std::abs(z2) < delta_ - margin;
  }

  // Height of the boundary above (z1, z2) along e3. Newton on
  // h -> F(embed(z1, z2, h)) with a bisection fallback inside the bracket
  // [-h_range, h_range] established at construction.
  double eta(double z1, double z2) const {
    const double tol_f = 1e-14 * dom_->grad_bound() * dom_->diameter();
    double h = 0.0;
    for (int it = 0; it < 12; ++it) {
      Vec3 x = embed(z1, z2, h);
      double f = dom_->F(x);
      double df = dom_->gradF(x).dot(e3_);
      if (std::abs(f) < tol_f) return h;
      if (std::abs(df) < 1e-14) break;
      double step = -f / df;
      double hn = h + step;
      if (std::abs(hn) > h_range_) break;
      h = hn;
      if (std::abs(step) < 1e-16 * dom_->diameter()) return h;
    }
    // Bisection: F > 0 outside (h = -h_range), F < 0 inside (h = +h_range).
    double lo = -h_range_, hi = h_range_;
    double flo = dom_->F(embed(z1, z2, lo));
    double fhi = dom_->F(embed(z1, z2, hi));
    if (!(flo > 0.0 && fhi < 0.0)) throw NumericalMiss("chart eta bracket lost");
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = dom_->F(embed(z1, z2, mid));
      if (std::abs(fm) < tol_f) return mid;
      (fm > 0.0 ? lo : hi) = mid;
      if (hi - lo < 1e-16 * dom_->diameter()) break;
    }
    return 0.5 * (lo + hi);
  }

  // Implicit first derivatives of eta at (z1, z2): differentiate
  // F(embed(z1, z2, eta)) = 0.
  Vec2 eta_grad(double z1, double z2, double* eta_out = nullptr) const {
    double h = eta(z1, z2);
    if (eta_out) *eta_out = h;
    Vec3 g = dom_->gradF(embed(z1, z2, h));
    double g3 = g.dot(e3_);
    if (std::abs(g3) < 1e-14) throw DegenerateBoundary("chart grazing gradient");
    return Vec2(-g.dot(e1_) / g3, -g.dot(e2_) / g3);
  }

  // Implicit second derivatives: with tangents x~_i = e_i + (d_i eta) e3,
  //   d_i d_j eta = -(x~_i . Hess F . x~_j) / (grad F . e3).
  Mat2 eta_hess(double z1, double z2, Vec2* grad_out = nullptr,
                double* eta_out = nullptr) const {
    double h = eta(z1, z2);
    if (eta_out) *eta_out = h;
    Vec3 x = embed(z1, z2, h);
    Vec3 g = dom_->gradF(x);
    Mat3 H = dom_->hessF(x);
    double g3 = g.dot(e3_);
    if (std::abs(g3) < 1e-14) throw DegenerateBoundary("chart grazing gradient");
    Vec2 gr(-g.dot(e1_) / g3, -g.dot(e2_) / g3);
    if (grad_out) *grad_out = gr;
    Vec3 t1 = e1_ + gr[0] * e3_;
    Vec3 t2 = e2_ + gr[1] * e3_;
    Mat2 out;
    out(0, 0) = -t1.dot(H * t1) / g3;
    out(1, 1) = -t2.dot(H * t2) / g3;
    out(0, 1) = out(1, 0) = -t1.dot(H * t2) / g3;
    return out;
  }

  Vec3 graph_point(double z1, double z2) const {
    return embed(z1, z2, eta(z1, z2));
  }

  // Outward unit normal at the graph point over (z1, z2).
  Vec3 normal(double z1, double z2) const {
    Vec2 g = eta_grad(z1, z2);
    Vec3 n = g[0] * e1_ + g[1] * e2_ - e3_;
    return n.normalized();
  }

 private:
  const Domain* dom_;
  Vec3 p0_, e1_, e2_, e3_;
  double delta_;
  double h_range_;
};

namespace chartdetail {

// Projects x0 onto the boundary along grad F. Newton with step damping;
// x0 must already be within a modest distance of the boundary.
inline std::optional<Vec3> project_to_boundary(const Domain& dom, Vec3 x,
                                               double tol) {
  for (int it = 0; it < 60; ++it) {
    double f = dom.F(x);
    if (std::abs(f) < tol) return x;
    Vec3 g = dom.gradF(x);
    double g2 = g.squaredNorm();
    if (g2 < 1e-20) return std::nullopt;
    Vec3 step = -(f / g2) * g;
    double cap = 0.05 * dom.diameter();
    if (step.norm() > cap) step *= cap / step.norm();
    x += step;
  }
  return std::nullopt;
}

}  // namespace chartdetail

// Attempts to build a chart of half-width delta centered at the boundary
// point nearest x0. Returns nullopt when the patch fails the graph bracket
// or the 1/8 slope bound; callers halve delta and retry.
inline std::optional<BoundaryChart> try_make_chart(const Domain& dom,
                                                   const Vec3& x0,
                                                   double delta,
                                                   int grid = 25) {
  const double diam = dom.diameter();
  auto p0 = chartdetail::project_to_boundary(dom, x0, 1e-13 * diam * dom.grad_bound());
  if (!p0) return std::nullopt;
  Vec3 n0;
  try {
    n0 = dom.outward_normal(*p0);
  } catch (const DegenerateBoundary&) {
    return std::nullopt;
  }
  Vec3 e3 = -n0, e1, e2;
  tangent_frame(n0, e1, e2);  // t1 x t2 = -n = e3, so (e1, e2, e3) is right-handed

  const double h_range = 0.45 * delta;
  BoundaryChart chart(&dom, *p0, e1, e2, e3, delta, h_range);

  // Bracket sanity on a coarse subgrid: inside above, outside below.
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double z1 = (-1.0 + 0.5 * i) * delta;
      double z2 = (-1.0 + 0.5 * j) * delta;
      if (dom.F(chart.embed(z1, z2, h_range)) >= 0.0) return std::nullopt;
      if (dom.F(chart.embed(z1, z2, -h_range)) <= 0.0) return std::nullopt;
    }
  }

  double slope = 0.0, c2 = 0.0, conc = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      double z1 = (-1.0 + 2.0 * i / (grid - 1)) * delta;
      double z2 = (-1.0 + 2.0 * j / (grid - 1)) * delta;
      Vec2 g;
      Mat2 H;
      try {
        H = chart.eta_hess(z1, z2, &g);
      } catch (const KinlabError&) {
        return std::nullopt;
      }
      slope = std::max(slope, std::abs(g[0]) + std::abs(g[1]));
      c2 = std::max(c2, std::abs(H(0, 0)) + std::abs(H(1, 1)) + std::abs(H(0, 1)));
      double tr = H(0, 0) + H(1, 1);
      double det = H(0, 0) * H(1, 1) - H(0, 1) * H(0, 1);
      double lam_min = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
      conc = std::max(conc, -lam_min);
    }
  }
  // Grid safety factor: off-grid extrema can exceed sampled values slightly.
  const double safety = 1.10;
  chart.slope_max = slope * safety;
  chart.eta_c2 = c2 * safety;
  chart.kappa_concave = conc * safety;
  if (chart.slope_max > 0.125) return std::nullopt;
  return chart;
}

// Outward normal with an on-boundary check; geometric queries that take
// arbitrary points route through this.
inline Vec3 normal_at(const Domain& dom, const Vec3& x) {
  double tol = 1e-9 * dom.diameter() * dom.grad_bound();
  if (std::abs(dom.F(x)) > tol) throw NotOnBoundary("normal_at: point off boundary");
  return dom.outward_normal(x);
}

// Second fundamental form of the boundary at x in tangent direction u,
// w.r.t. the axis-aligned graph chart picked by the dominant normal
// component (ties toward the lowest index). Sign convention: negative
// values mean tangent rays enter the domain (concave side).
inline double second_form(const Domain& dom, const Vec3& x, const Vec3& u) {
  Vec3 n = normal_at(dom, x);
  if (std::abs(u.dot(n)) > 1e-8 * u.norm())
    throw NotTangent("second_form: direction not tangent");
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) > std::abs(n[k])) k = i;
  Vec3 e3 = -Vec3::Unit(k) * (n[k] > 0 ? 1.0 : -1.0);
  Vec3 e1 = Vec3::Unit((k + 1) % 3);
  Vec3 e2 = Vec3::Unit((k + 2) % 3);

  Vec3 g = dom.gradF(x);
  Mat3 H = dom.hessF(x);
  double g3 = g.dot(e3);
  if (std::abs(g3) < 1e-14) throw DegenerateBoundary("second_form: grazing gradient");
  double d1 = -g.dot(e1) / g3;
  double d2 = -g.dot(e2) / g3;
  Vec3 t1 = e1 + d1 * e3;
  Vec3 t2 = e2 + d2 * e3;
  double h11 = -t1.dot(H * t1) / g3;
  double h22 = -t2.dot(H * t2) / g3;
  double h12 = -t1.dot(H * t2) / g3;

  Vec2 uc(u.dot(e1), u.dot(e2));
  double len = uc.norm();
  if (len < 1e-12 * u.norm())
    throw NotTangent("second_form: direction projects to zero");
  uc /= len;
  return uc[0] * uc[0] * h11 + 2.0 * uc[0] * uc[1] * h12 + uc[1] * uc[1] * h22;
}

// Curvature of the boundary toward the interior along tangent direction d:
// positive values mean a ray from x in direction d lifts off into the
// domain quadratically (chords of concave patches).
inline double chord_rise_curvature(const Domain& dom, const Vec3& x, const Vec3& d) {
  return -second_form(dom, x, d);
}

}  // namespace kinlab
