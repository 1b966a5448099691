#pragma once

// Tangential-launch machinery: the local parametrization of grazing phase
// points over a boundary chart, its exact tangent rows and phase-space normal
// (the formal determinant of the 5x6 Jacobian), a global sampler that walks
// first tangential segments, and sampled distance queries.
//
// Over one chart the set of grazing launches is parametrized by
//   (x1, x2, theta, s, r_v)  ->  (X, V),
//   X = (x1, x2, eta(x1,x2)) + s * r_v * dir(theta),   V = r_v * dir(theta),
// where dir(theta) = cos(theta) tau1 + sin(theta) tau2 and (tau1, tau2) is the
// unit tangent frame of the graph. All five partial derivatives are available
// in closed form through the implicit Hessian of eta, so the codimension-1
// normal comes out as an exact cofactor expansion rather than a finite
// difference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kinlab/atlas.hpp"
#include "kinlab/chart.hpp"
#include "kinlab/core.hpp"
#include "kinlab/geom.hpp"
#include "kinlab/ray.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

// Coordinates of one grazing launch on a chart. theta is measured against the
// graph tangent frame at the launch point, r_v is the speed, and s is the
// travel parameter along the tangential ray (arclength / speed contributes
// s * r_v of straight-line travel).
struct SingularPatchParams {
  int chart_id = 0;
  double x1 = 0.0;
  double x2 = 0.0;
  double theta = 0.0;
  double r_v = 1.0;
  double s = 0.0;
};

namespace singdetail {

// Unit tangent frame of the chart graph at (z1, z2), chart components, with
// exact first derivatives in z1 and z2:
//   tau1 = unit(1, 0, d1 eta),
//   n    = unit(d1 eta, d2 eta, -1)   (outward; the chart z3 axis is inward),
//   tau2 = tau1 x n                    (unit automatically, tau1 dot n = 0).
// d(unit(w)) = (dw - u (u dot dw)) / |w| gives the derivatives; since |tau2|
// is identically 1, d(tau2) needs no projection.
struct GraphFrame {
  double eta = 0.0;
  Vec2 grad = Vec2::Zero();
  Vec3 tau1 = Vec3::Zero(), tau2 = Vec3::Zero(), outward = Vec3::Zero();
  Vec3 d_tau1[2], d_tau2[2];
};

inline Vec3 unit_deriv(const Vec3& u, double inv_norm, const Vec3& dw) {
  return inv_norm * (dw - u * u.dot(dw));
}

inline GraphFrame graph_frame(const BoundaryChart& ch, double z1, double z2) {
  GraphFrame fr;
  Mat2 hess = ch.eta_hess(z1, z2, &fr.grad, &fr.eta);
  Vec3 t_raw(1.0, 0.0, fr.grad[0]);
  Vec3 n_raw(fr.grad[0], fr.grad[1], -1.0);
  Vec3 dt_raw[2] = {Vec3(0, 0, hess(0, 0)), Vec3(0, 0, hess(0, 1))};
  Vec3 dn_raw[2] = {Vec3(hess(0, 0), hess(0, 1), 0), Vec3(hess(0, 1), hess(1, 1), 0)};
  double inv_t = 1.0 / t_raw.norm();
  double inv_n = 1.0 / n_raw.norm();
  fr.tau1 = t_raw * inv_t;
  fr.outward = n_raw * inv_n;
  fr.tau2 = fr.tau1.cross(fr.outward);
  for (int k = 0; k < 2; ++k) {
    Vec3 dt1 = unit_deriv(fr.tau1, inv_t, dt_raw[k]);
    Vec3 dn = unit_deriv(fr.outward, inv_n, dn_raw[k]);
    fr.d_tau1[k] = dt1;
    fr.d_tau2[k] = dt1.cross(fr.outward) + fr.tau1.cross(dn);
  }
  return fr;
}

// Chart-to-world rotation; columns are the chart axes, det = +1.
inline Mat3 chart_basis(const BoundaryChart& ch) {
  Mat3 basis;
  basis.col(0) = ch.t1();
  basis.col(1) = ch.t2();
  basis.col(2) = ch.inward();
  return basis;
}

// Rows d(X,V)/d(x1, x2, theta, s, r_v) in chart components.
inline Eigen::Matrix<double, 5, 6> tangent_rows_chart(const BoundaryChart& ch, double x1,
                                                      double x2, double theta, double r_v,
                                                      double s) {
  if (!ch.in_patch(x1, x2)) throw OutOfPatch("singular rows: launch outside patch");
  GraphFrame fr = graph_frame(ch, x1, x2);
  double c = std::cos(theta), sn = std::sin(theta);
  Vec3 dir = c * fr.tau1 + sn * fr.tau2;
  Vec3 dir_theta = -sn * fr.tau1 + c * fr.tau2;
  Vec3 ddir[2] = {c * fr.d_tau1[0] + sn * fr.d_tau2[0], c * fr.d_tau1[1] + sn * fr.d_tau2[1]};

  Eigen::Matrix<double, 5, 6> rows;
  auto put = [&rows](int r, const Vec3& dx, const Vec3& dv) {
    rows.row(r) << dx.transpose(), dv.transpose();
  };
  put(0, Vec3(1, 0, fr.grad[0]) + (s * r_v) * ddir[0], r_v * ddir[0]);
  put(1, Vec3(0, 1, fr.grad[1]) + (s * r_v) * ddir[1], r_v * ddir[1]);
  put(2, (s * r_v) * dir_theta, r_v * dir_theta);
  put(3, r_v * dir, Vec3::Zero());
  put(4, s * dir, dir);
  return rows;
}

}  // namespace singdetail

// Phase point of the local parametrization, world coordinates. The launch
// must lie in the chart patch, and the straight tangential ray must stay
// inside the patch cylinder up to travel s (in-plane motion is linear, so the
// endpoint check covers the whole segment).
inline PhasePoint singular_param(const BoundaryChart& ch, double x1, double x2, double theta,
                                 double r_v, double s) {
  if (!ch.in_patch(x1, x2)) throw OutOfPatch("singular_param: launch outside patch");
  singdetail::GraphFrame fr = singdetail::graph_frame(ch, x1, x2);
  Vec3 dir = std::cos(theta) * fr.tau1 + std::sin(theta) * fr.tau2;
  Vec3 xc = Vec3(x1, x2, fr.eta) + (s * r_v) * dir;
  if (std::max(std::abs(xc[0]), std::abs(xc[1])) >= ch.delta())
    throw RayLeavesChart("singular_param: tangential ray leaves the chart before s");
  Vec3 vc = r_v * dir;
  return {ch.embed(xc[0], xc[1], xc[2]),
          vc[0] * ch.t1() + vc[1] * ch.t2() + vc[2] * ch.inward()};
}

// Tangent rows of the parametrization, world components. s enters only as a
// formal coordinate, so unlike singular_param no in-patch constraint is
// placed on the travelled endpoint.
inline Eigen::Matrix<double, 5, 6> singular_tangent_rows(const BoundaryChart& ch, double x1,
                                                         double x2, double theta, double r_v,
                                                         double s) {
  Eigen::Matrix<double, 5, 6> rows = singdetail::tangent_rows_chart(ch, x1, x2, theta, r_v, s);
  Mat3 basis_t = singdetail::chart_basis(ch).transpose();
  Eigen::Matrix<double, 5, 6> world;
  world.block<5, 3>(0, 0) = rows.block<5, 3>(0, 0) * basis_t;
  world.block<5, 3>(0, 3) = rows.block<5, 3>(0, 3) * basis_t;
  return world;
}

// Phase-space normal of the parametrized sheet: the generalized cross product
// of the five tangent rows, N_k = (-1)^(1+k) det(rows without column k),
// returned in world components. Zero iff the rows are rank-deficient (flat
// spots); orthogonal to every tangent row by construction.
inline Vec6 singular_normal(const BoundaryChart& ch, double x1, double x2, double theta,
                            double r_v, double s) {
  Eigen::Matrix<double, 5, 6> rows = singdetail::tangent_rows_chart(ch, x1, x2, theta, r_v, s);
  Vec6 n_chart;
  Eigen::Matrix<double, 5, 5> minor;
  for (int k = 0; k < 6; ++k) {
    int cc = 0;
    for (int c = 0; c < 6; ++c) {
      if (c == k) continue;
      minor.col(cc++) = rows.col(c);
    }
    n_chart[k] = ((k % 2 == 0) ? 1.0 : -1.0) * minor.determinant();
  }
  Mat3 basis = singdetail::chart_basis(ch);
  Vec6 n_world;
  n_world.head<3>() = basis * n_chart.head<3>();
  n_world.tail<3>() = basis * n_chart.tail<3>();
  return n_world;
}

inline const BoundaryChart& atlas_chart(const Atlas& atlas, int chart_id) {
  if (chart_id < 0 || static_cast<std::size_t>(chart_id) >= atlas.charts().size())
    throw OutOfPatch("chart id out of range");
  return atlas.charts()[static_cast<std::size_t>(chart_id)];
}

inline PhasePoint singular_param(const Atlas& atlas, const SingularPatchParams& p) {
  return singular_param(atlas_chart(atlas, p.chart_id), p.x1, p.x2, p.theta, p.r_v, p.s);
}

inline Eigen::Matrix<double, 5, 6> singular_tangent_rows(const Atlas& atlas,
                                                         const SingularPatchParams& p) {
  return singular_tangent_rows(atlas_chart(atlas, p.chart_id), p.x1, p.x2, p.theta, p.r_v, p.s);
}

inline Vec6 singular_normal(const Atlas& atlas, const SingularPatchParams& p) {
  return singular_normal(atlas_chart(atlas, p.chart_id), p.x1, p.x2, p.theta, p.r_v, p.s);
}

// Draws n phase points on the singular set: sample a boundary point, launch
// tangentially with a uniform angle and speed, and emit a uniform point of the
// first straight segment (up to the first boundary contact; flat launches
// that never leave the surface touch immediately, and the rare unbounded
// segment is capped at one diameter). Every output satisfies
// n(x_b(x, v)) dot v = 0 exactly at the launch certificate. Samples are
// deterministic in (seed, i) and independent of n.
inline std::vector<PhasePoint> sample_singular_set(const Domain& dom, std::size_t n,
                                                   std::uint64_t seed, double v_max = 5.0) {
  if (n < 1) throw ConfigInvalid("sample_singular_set: n must be positive");
  if (!(v_max > 0.0)) throw ConfigInvalid("sample_singular_set: v_max must be positive");
  RngStream rng(seed, "singular-set");
  std::vector<PhasePoint> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Vec3 x_b = dom.boundary_sample(rng, i).x;
    Vec3 t1, t2;
    tangent_frame(dom.outward_normal(x_b), t1, t2);
    double theta = rng.uniform(i, 50, 0.0, 2.0 * kPi);
    double r_v = rng.uniform(i, 51, 0.0, v_max);
    double frac = rng.uniform(i, 52);
    Vec3 dir = std::cos(theta) * t1 + std::sin(theta) * t2;
    ExitRecord rec = exit_along(dom, x_b, dir);
    double seg = rec.never_exits ? dom.diameter() : rec.arclength;
    out.push_back({x_b + (frac * seg) * dir, r_v * dir});
  }
  if (out.empty()) throw NoGrazingDirections("sample_singular_set: no tangential launches");
  return out;
}

// Distance from p to the sampled singular set: min over samples of the
// phase-space Euclidean distance, with the position part measured through
// min_image so periodic directions wrap. Monotone nonincreasing under sample
// refinement (min over a superset).
inline double dist_to_singular(const Domain& dom, const PhasePoint& p,
                               const std::vector<PhasePoint>& samples) {
  if (samples.empty()) throw EmptySampleSet("dist_to_singular: empty sample set");
  double best = kInf;
  for (const PhasePoint& q : samples) {
    double d2 = dom.min_image(p.x, q.x).squaredNorm() + (p.v - q.v).squaredNorm();
    best = std::min(best, d2);
  }
  return std::sqrt(best);
}

}  // namespace kinlab
