#pragma once

// Implicit-surface domain gallery. A domain is the open set {F < 0} with C^2 signed profile F
// near the boundary; outward normal is gradF/|gradF|. Each domain also provides an area-weighted
// boundary sampler: E[w * f(x)] over samples equals the surface integral of f.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kinlab/core.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

struct BoundarySample {
  Vec3 x;
  double weight;  // dS / pdf, so (1/n) * sum w_i f(x_i) estimates the surface integral
};

struct Aabb {
  Vec3 lo, hi;
};

// Smooth parametrized piece of the boundary. The pieces jointly cover the whole surface
// (overlap at seams is fine); consumers subdivide the parameter rectangle, so the map only
// needs to be continuous with cells shrinking in world size as the rectangle shrinks.
struct BoundaryPatch {
  double u0, u1, v0, v1;
  std::function<Vec3(double, double)> world;
};

class Domain {
 public:
  virtual ~Domain() = default;
  virtual std::string name() const = 0;
  virtual double F(const Vec3& x) const = 0;
  virtual Vec3 gradF(const Vec3& x) const = 0;
  virtual Mat3 hessF(const Vec3& x) const = 0;
  virtual double diameter() const = 0;
  // Safe global bounds near the boundary, used by the marching tracer.
  virtual double grad_bound() const = 0;
  virtual double hess_bound() const = 0;
  virtual Vec3 interior_point() const = 0;
  virtual Aabb box() const = 0;
  virtual BoundarySample boundary_sample(const RngStream& rng, std::uint64_t i) const = 0;
  virtual std::vector<BoundaryPatch> boundary_patches() const = 0;
  virtual std::optional<double> volume_closed_form() const { return std::nullopt; }

  virtual bool periodic() const { return false; }
  virtual Vec3 wrap(const Vec3& x) const { return x; }
  // Component-wise identification period; zero means that axis is not periodic.
  virtual Vec3 period() const { return Vec3::Zero(); }
  // Shortest displacement from b to a under the domain's identifications.
  virtual Vec3 min_image(const Vec3& a, const Vec3& b) const { return a - b; }

  // Exit arclength along unit dir from a strictly interior point, when a closed form exists.
  virtual std::optional<double> exit_arclength_closed_form(const Vec3&, const Vec3&) const {
    return std::nullopt;
  }

  bool inside(const Vec3& x) const { return F(x) < 0.0; }
  Vec3 outward_normal(const Vec3& x) const {
    Vec3 g = gradF(x);
    double n = g.norm();
    if (n < 1e-14) throw DegenerateBoundary("outward_normal: vanishing gradient");
    return g / n;
  }
};

// ---------------------------------------------------------------------------------------------
// Unit ball.

class BallDomain final : public Domain {
 public:
  std::string name() const override { return "ball"; }
  double F(const Vec3& x) const override { return x.squaredNorm() - 1.0; }
  Vec3 gradF(const Vec3& x) const override { return 2.0 * x; }
  Mat3 hessF(const Vec3&) const override { return 2.0 * Mat3::Identity(); }
  double diameter() const override { return 2.0; }
  double grad_bound() const override { return 2.4; }
  double hess_bound() const override { return 2.0; }
  Vec3 interior_point() const override { return Vec3::Zero(); }
  Aabb box() const override { return {Vec3(-1.01, -1.01, -1.01), Vec3(1.01, 1.01, 1.01)}; }
  std::optional<double> volume_closed_form() const override { return 4.0 * kPi / 3.0; }
  BoundarySample boundary_sample(const RngStream& rng, std::uint64_t i) const override {
    return {rng.sphere_dir(i), 4.0 * kPi};
  }
  std::vector<BoundaryPatch> boundary_patches() const override {
    std::vector<BoundaryPatch> out;
    for (int a = 0; a < 3; ++a)
      for (int s = -1; s <= 1; s += 2)
        out.push_back({-1.0, 1.0, -1.0, 1.0, [a, s](double u, double v) {
                         Vec3 q;
                         q[a] = s;
                         q[(a + 1) % 3] = u;
                         q[(a + 2) % 3] = v;
                         return Vec3(q.normalized());
                       }});
    return out;
  }
  std::optional<double> exit_arclength_closed_form(const Vec3& x, const Vec3& d) const override {
    double b = x.dot(d), c = x.squaredNorm() - 1.0;
    double disc = b * b - c;
    if (disc < 0) disc = 0;
    return std::max(0.0, -b + std::sqrt(disc));
  }
};

// ---------------------------------------------------------------------------------------------
// Laterally periodic slab: (x1,x2) in [0,2) periodic, 0 < x3 < 1. Flat boundary, so the grazing
// set is exactly {v3 = 0}; rays with v3 = 0 never exit.

class SlabDomain final : public Domain {
 public:
  std::string name() const override { return "slab"; }
  double F(const Vec3& x) const override { return std::abs(x.z() - 0.5) - 0.5; }
  Vec3 gradF(const Vec3& x) const override {
    return Vec3(0, 0, x.z() >= 0.5 ? 1.0 : -1.0);
  }
  Mat3 hessF(const Vec3&) const override { return Mat3::Zero(); }
  double diameter() const override { return 3.0; }
  double grad_bound() const override { return 1.0; }
  double hess_bound() const override { return 1e-6; }
  Vec3 interior_point() const override { return Vec3(1, 1, 0.5); }
  Aabb box() const override { return {Vec3(0, 0, -0.01), Vec3(2, 2, 1.01)}; }
  std::optional<double> volume_closed_form() const override { return 4.0; }
  bool periodic() const override { return true; }
  Vec3 wrap(const Vec3& x) const override {
    auto w = [](double a) {
      double r = std::fmod(a, 2.0);
      return r < 0 ? r + 2.0 : r;
    };
    return Vec3(w(x.x()), w(x.y()), x.z());
  }
  Vec3 period() const override { return Vec3(2.0, 2.0, 0.0); }
  Vec3 min_image(const Vec3& a, const Vec3& b) const override {
    auto m = [](double d) { return d - 2.0 * std::round(d / 2.0); };
    Vec3 d = a - b;
    return Vec3(m(d.x()), m(d.y()), d.z());
  }
  BoundarySample boundary_sample(const RngStream& rng, std::uint64_t i) const override {
    bool top = rng.uniform(i, 20) < 0.5;
    double u = rng.uniform(i, 21, 0.0, 2.0);
    double t = rng.uniform(i, 22, 0.0, 2.0);
    return {Vec3(u, t, top ? 1.0 : 0.0), 8.0};
  }
  std::vector<BoundaryPatch> boundary_patches() const override {
    std::vector<BoundaryPatch> out;
    for (int top = 0; top <= 1; ++top)
      out.push_back({0.0, 2.0, 0.0, 2.0, [top](double u, double v) {
                       return Vec3(u, v, top ? 1.0 : 0.0);
                     }});
    return out;
  }
  std::optional<double> exit_arclength_closed_form(const Vec3& x, const Vec3& d) const override {
    if (d.z() > 1e-300) return (1.0 - x.z()) / d.z();
    if (d.z() < -1e-300) return x.z() / (-d.z());
    return kInf;
  }
};

// ---------------------------------------------------------------------------------------------
// Rounded slab with a concave dimple. The core profile is a 4-norm rounded box (C^2 across the
// face/edge blends, generous blend radius so no convex curvature exceeds about 1), composed with
// a shear x3 -> x3 - eta(x1,x2) w(x3) that carves a strictly concave pocket into the bottom
// face. The shear weight w dies out above the floor, so the ceiling stays flat and the pocket is
// the only place where grazing chords re-enter.

class BumpDomain final : public Domain {
 public:
  BumpDomain() : center_(0, 0, 3.57), half_(2.43, 2.43, 0.0), rho_(3.57) {}

  std::string name() const override { return "bump"; }

  // Dimple profile and derivatives. eta = -0.5 exp(-r^2) for r <= 1.3, capped to 0 by r = 2.3
  // with a C^2 quintic ramp; the whole transition stays inside the flat bottom face.
  static double eta(double x, double y) {
    double r2 = x * x + y * y;
    double r = std::sqrt(r2);
    return -0.5 * std::exp(-r2) * cap(r);
  }
  static Vec2 eta_grad(double x, double y) {
    double r2 = x * x + y * y;
    double r = std::sqrt(r2);
    double e = std::exp(-r2);
    double z = cap(r), zp = cap_d(r);
    // d/dxi [-0.5 e z] = -0.5 e xi (-2 z + zp / r); the zp term only fires at r >= 1.5 > 0.
    double radial = -2.0 * z + (r > 1e-12 ? zp / r : 0.0);
    return Vec2(-0.5 * e * x * radial, -0.5 * e * y * radial);
  }
  static Mat2 eta_hess(double x, double y) {
    double r2 = x * x + y * y;
    double r = std::sqrt(r2);
    double e = std::exp(-r2);
    double z = cap(r), zp = cap_d(r), zpp = cap_dd(r);
    double radial = -2.0 * z + (r > 1e-12 ? zp / r : 0.0);
    double dradial_over_r =
        r > 1e-12 ? (-2.0 * zp + zpp / r - zp / r2) / r : 0.0;  // (1/r) d(radial)/dr
    Mat2 H;
    double xs[2] = {x, y};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double term = -0.5 * e * (-2.0 * xs[j] * xs[i] * radial + (i == j ? radial : 0.0) +
                                  xs[i] * xs[j] * dradial_over_r);
        H(i, j) = term;
      }
    return H;
  }

  // Shear weight: 1 at and below the floor, 0 from z = 2 up. Keeps the carve local to the
  // bottom face; the z-derivative never exceeds eta * w' < 0.5, so x3 -> u3 stays monotone.
  static double shear_w(double z) { return 1.0 - smoothstep5(z / 2.0); }
  static double shear_w_d(double z) { return -smoothstep5_d(z / 2.0) / 2.0; }
  static double shear_w_dd(double z) { return -smoothstep5_dd(z / 2.0) / 4.0; }

  // Inverts u3 = x3 - eta w(x3) for x3. The map is strictly increasing (|eta w'| < 0.5).
  static double solve_world_z(double et, double u3) {
    double x3 = u3 + et;  // exact when w = 1 throughout (floor pieces)
    for (int it = 0; it < 60; ++it) {
      double f = x3 - et * shear_w(x3) - u3;
      double df = 1.0 - et * shear_w_d(x3);
      double step = f / df;
      x3 -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return x3;
  }

  double F(const Vec3& x) const override { return rb(pre_shear(x)); }
  Vec3 gradF(const Vec3& x) const override {
    Vec3 u = pre_shear(x);
    Vec3 g = rb_grad(u);
    Vec2 eg = eta_grad(x.x(), x.y());
    double et = eta(x.x(), x.y());
    double w = shear_w(x.z()), wd = shear_w_d(x.z());
    double D = 1.0 - et * wd;
    return Vec3(g.x() - g.z() * eg.x() * w, g.y() - g.z() * eg.y() * w, g.z() * D);
  }
  Mat3 hessF(const Vec3& x) const override {
    Vec3 u = pre_shear(x);
    Mat3 Hf = rb_hess(u);
    Vec3 g = rb_grad(u);
    Vec2 eg = eta_grad(x.x(), x.y());
    Mat2 Eh = eta_hess(x.x(), x.y());
    double et = eta(x.x(), x.y());
    double w = shear_w(x.z()), wd = shear_w_d(x.z()), wdd = shear_w_dd(x.z());
    double D = 1.0 - et * wd;
    Mat3 J = Mat3::Identity();
    J(2, 0) = -eg.x() * w;
    J(2, 1) = -eg.y() * w;
    J(2, 2) = D;
    Mat3 H = J.transpose() * Hf * J;
    // Second derivatives of u3(x): -eta_ij w in-plane, -eta_i w' mixed, -eta w'' in z.
    Mat3 U3;
    U3 << -Eh(0, 0) * w, -Eh(0, 1) * w, -eg.x() * wd,
          -Eh(0, 1) * w, -Eh(1, 1) * w, -eg.y() * wd,
          -eg.x() * wd,  -eg.y() * wd,  -et * wdd;
    H += g.z() * U3;
    return H;
  }

  double diameter() const override { return 18.5; }
  double grad_bound() const override { return 2.0; }
  double hess_bound() const override { return 8.0; }
  Vec3 interior_point() const override { return Vec3(0, 0, 3.57); }
  Aabb box() const override { return {Vec3(-6.05, -6.05, -0.55), Vec3(6.05, 6.05, 7.19)}; }

  BoundarySample boundary_sample(const RngStream& rng, std::uint64_t i) const override {
    const auto& pieces = piece_table();
    double u = rng.uniform(i, 30) * total_weight();
    std::size_t k = 0;
    while (k + 1 < pieces.size() && u > pieces[k].cum) ++k;
    double p = pieces[k].approx_area / total_weight();
    double u1 = rng.uniform(i, 31), u2 = rng.uniform(i, 32);
    Vec3 Y, T1, T2;
    sample_piece(pieces[k], u1, u2, rng, i, Y, T1, T2);
    // Shear push: solve x3 - eta w(x3) = Y3 (monotone in x3), then push tangents through
    // the inverse shear Jacobian.
    double et = eta(Y.x(), Y.y());
    double x3 = solve_world_z(et, Y.z());
    double w = shear_w(x3), wd = shear_w_d(x3);
    double D = 1.0 - et * wd;
    Vec2 eg = eta_grad(Y.x(), Y.y());
    Vec3 X(Y.x(), Y.y(), x3);
    Vec3 T1s(T1.x(), T1.y(), (eg.x() * w * T1.x() + eg.y() * w * T1.y() + T1.z()) / D);
    Vec3 T2s(T2.x(), T2.y(), (eg.x() * w * T2.x() + eg.y() * w * T2.y() + T2.z()) / D);
    double Jac = T1s.cross(T2s).norm();
    return {X, Jac / p};
  }

  std::vector<BoundaryPatch> boundary_patches() const override {
    std::vector<BoundaryPatch> out;
    const double b[3] = {half_.x(), half_.y(), half_.z()};
    const double rho = rho_;
    const Vec3 c0 = center_;
    auto to_world = [c0](Vec3 p) {
      Vec3 Y = c0 + p;
      return Vec3(Y.x(), Y.y(), solve_world_z(eta(Y.x(), Y.y()), Y.z()));
    };
    for (int a = 0; a < 3; ++a)
      for (int s = -1; s <= 1; s += 2) {
        int i1 = (a + 1) % 3, i2 = (a + 2) % 3;
        if (b[i1] * b[i2] <= 0.0) continue;
        out.push_back({0.0, 1.0, 0.0, 1.0, [=](double u, double v) {
                         Vec3 p = Vec3::Zero();
                         p[a] = s * (b[a] + rho);
                         p[i1] = (2 * u - 1) * b[i1];
                         p[i2] = (2 * v - 1) * b[i2];
                         return to_world(p);
                       }});
      }
    for (int a = 0; a < 3; ++a) {
      if (b[a] <= 0.0) continue;
      for (int s1 = -1; s1 <= 1; s1 += 2)
        for (int s2 = -1; s2 <= 1; s2 += 2) {
          int i1 = (a + 1) % 3, i2 = (a + 2) % 3;
          out.push_back({0.0, 1.0, 0.0, kPi / 2, [=](double u, double phi) {
                           double m0, m1, d0, d1;
                           arc4(phi, m0, m1, d0, d1);
                           Vec3 p = Vec3::Zero();
                           p[a] = (2 * u - 1) * b[a];
                           p[i1] = s1 * (b[i1] + rho * m0);
                           p[i2] = s2 * (b[i2] + rho * m1);
                           return to_world(p);
                         }});
        }
    }
    for (int s0 = -1; s0 <= 1; s0 += 2)
      for (int s1 = -1; s1 <= 1; s1 += 2)
        for (int s2 = -1; s2 <= 1; s2 += 2)
          out.push_back({0.0, kPi / 2, 0.0, kPi / 2, [=](double th, double phi) {
                           Vec3 u(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi),
                                  std::cos(th));
                           double s4 = std::pow(std::pow(u.x(), 4) + std::pow(u.y(), 4) +
                                                    std::pow(u.z(), 4),
                                                0.25);
                           Vec3 m = u / s4;
                           int sg[3] = {s0, s1, s2};
                           Vec3 p;
                           for (int k = 0; k < 3; ++k) p[k] = sg[k] * (b[k] + rho * m[k]);
                           return to_world(p);
                         }});
    return out;
  }

 private:
  Vec3 center_, half_;
  double rho_;

  static double cap(double r) { return 1.0 - smoothstep5((r - 1.3) / 1.0); }
  static double cap_d(double r) { return -smoothstep5_d((r - 1.3) / 1.0); }
  static double cap_dd(double r) { return -smoothstep5_dd((r - 1.3) / 1.0); }

  Vec3 pre_shear(const Vec3& x) const {
    return Vec3(x.x(), x.y(), x.z() - eta(x.x(), x.y()) * shear_w(x.z()));
  }

  // 4-norm rounded box profile in pre-shear coordinates.
  double rb(const Vec3& y) const {
    Vec3 p = y - center_;
    Vec3 q(std::abs(p.x()) - half_.x(), std::abs(p.y()) - half_.y(),
           std::abs(p.z()) - half_.z());
    double m = q.maxCoeff();
    double s4 = 0;
    for (int i = 0; i < 3; ++i) {
      double qp = std::max(q[i], 0.0);
      s4 += qp * qp * qp * qp;
    }
    return std::pow(s4, 0.25) + std::min(m, 0.0) - rho_;
  }
  Vec3 rb_grad(const Vec3& y) const {
    Vec3 p = y - center_;
    Vec3 q(std::abs(p.x()) - half_.x(), std::abs(p.y()) - half_.y(),
           std::abs(p.z()) - half_.z());
    double s4 = 0;
    for (int i = 0; i < 3; ++i) {
      double qp = std::max(q[i], 0.0);
      s4 += qp * qp * qp * qp;
    }
    Vec3 g = Vec3::Zero();
    if (s4 > 0) {
      double s = std::pow(s4, 0.25);
      for (int i = 0; i < 3; ++i) {
        double qp = std::max(q[i], 0.0);
        double sgn = p[i] >= 0 ? 1.0 : -1.0;
        g[i] = sgn * qp * qp * qp / (s * s * s);
      }
    } else {
      // Deep in the core (F <= -rho): subgradient of max along the dominant face.
      int k = 0;
      if (q[1] > q[k]) k = 1;
      if (q[2] > q[k]) k = 2;
      g[k] = p[k] >= 0 ? 1.0 : -1.0;
    }
    return g;
  }
  Mat3 rb_hess(const Vec3& y) const {
    Vec3 p = y - center_;
    Vec3 q(std::abs(p.x()) - half_.x(), std::abs(p.y()) - half_.y(),
           std::abs(p.z()) - half_.z());
    double s4 = 0;
    for (int i = 0; i < 3; ++i) {
      double qp = std::max(q[i], 0.0);
      s4 += qp * qp * qp * qp;
    }
    Mat3 H = Mat3::Zero();
    if (s4 <= 0) return H;
    double s = std::pow(s4, 0.25);
    double s3 = s * s * s, s7 = s3 * s3 * s;
    for (int i = 0; i < 3; ++i) {
      double qpi = std::max(q[i], 0.0);
      double si = p[i] >= 0 ? 1.0 : -1.0;
      for (int j = 0; j < 3; ++j) {
        double qpj = std::max(q[j], 0.0);
        double sj = p[j] >= 0 ? 1.0 : -1.0;
        double v = -3.0 * si * sj * qpi * qpi * qpi * qpj * qpj * qpj / s7;
        if (i == j) v += 3.0 * qpi * qpi / s3;
        H(i, j) = v;
      }
    }
    return H;
  }

  // Boundary pieces in pre-shear coordinates: 6 flat faces, 12 edge blends (quarter 4-norm
  // arcs), 8 corner blends (4-norm sphere octants mapped from the round octant).
  struct Piece {
    int kind;  // 0 face, 1 edge, 2 corner
    int axis;  // face normal axis / edge axis
    int s0, s1, s2;
    double approx_area;
    double cum;
  };

  const std::vector<Piece>& piece_table() const {
    static const std::vector<Piece> table = [this] {
      std::vector<Piece> t;
      double b[3] = {half_.x(), half_.y(), half_.z()};
      for (int a = 0; a < 3; ++a)
        for (int s = -1; s <= 1; s += 2) {
          int i1 = (a + 1) % 3, i2 = (a + 2) % 3;
          t.push_back({0, a, s, 0, 0, 4.0 * b[i1] * b[i2], 0});
        }
      for (int a = 0; a < 3; ++a)
        for (int s1 = -1; s1 <= 1; s1 += 2)
          for (int s2 = -1; s2 <= 1; s2 += 2)
            t.push_back({1, a, s1, s2, 0, 2.0 * b[a] * 1.6 * rho_, 0});
      for (int s0 = -1; s0 <= 1; s0 += 2)
        for (int s1 = -1; s1 <= 1; s1 += 2)
          for (int s2 = -1; s2 <= 1; s2 += 2)
            t.push_back({2, 0, s0, s1, s2, 1.8 * rho_ * rho_, 0});
      // Degenerate core extents (half_z = 0 here) make some pieces vanish; drop them so the
      // cumulative sampler never divides by a zero density.
      std::erase_if(t, [](const Piece& p) { return p.approx_area <= 0.0; });
      double c = 0;
      for (auto& p : t) {
        c += p.approx_area;
        p.cum = c;
      }
      return t;
    }();
    return table;
  }
  double total_weight() const { return piece_table().back().cum; }

  // Quarter arc of the planar 4-norm circle, angle-parametrized: m(phi) = (cos,sin)/|.|_4.
  static void arc4(double phi, double& m0, double& m1, double& d0, double& d1) {
    double c = std::cos(phi), s = std::sin(phi);
    double s4 = std::pow(c * c * c * c + s * s * s * s, 0.25);
    double ds4 = (s * s * s * c - c * c * c * s) / (s4 * s4 * s4);
    m0 = c / s4;
    m1 = s / s4;
    d0 = -s / s4 - c * ds4 / (s4 * s4);
    d1 = c / s4 - s * ds4 / (s4 * s4);
  }

  void sample_piece(const Piece& pc, double u1, double u2, const RngStream& rng, std::uint64_t i,
                    Vec3& Y, Vec3& T1, Vec3& T2) const {
    double b[3] = {half_.x(), half_.y(), half_.z()};
    Vec3 p = Vec3::Zero();
    if (pc.kind == 0) {
      int a = pc.axis, i1 = (a + 1) % 3, i2 = (a + 2) % 3;
      p[a] = pc.s0 * (b[a] + rho_);
      p[i1] = (2 * u1 - 1) * b[i1];
      p[i2] = (2 * u2 - 1) * b[i2];
      T1 = Vec3::Zero();
      T1[i1] = 2 * b[i1];
      T2 = Vec3::Zero();
      T2[i2] = 2 * b[i2];
    } else if (pc.kind == 1) {
      int a = pc.axis, i1 = (a + 1) % 3, i2 = (a + 2) % 3;
      double phi = u2 * kPi / 2;
      double m0, m1, d0, d1;
      arc4(phi, m0, m1, d0, d1);
      p[a] = (2 * u1 - 1) * b[a];
      p[i1] = pc.s0 * (b[i1] + rho_ * m0);
      p[i2] = pc.s1 * (b[i2] + rho_ * m1);
      T1 = Vec3::Zero();
      T1[a] = 2 * b[a];
      T2 = Vec3::Zero();
      T2[i1] = pc.s0 * rho_ * d0 * kPi / 2;
      T2[i2] = pc.s1 * rho_ * d1 * kPi / 2;
    } else {
      // Corner: u uniform on the round octant, mapped to the 4-norm sphere octant.
      Vec3 u = rng.sphere_dir(i, 33).cwiseAbs();
      double s4 = std::pow(std::pow(u.x(), 4) + std::pow(u.y(), 4) + std::pow(u.z(), 4), 0.25);
      Vec3 m = u / s4;
      Vec3 u3(u.x() * u.x() * u.x(), u.y() * u.y() * u.y(), u.z() * u.z() * u.z());
      // dm/du for m = u/|u|_4, restricted below to the sphere tangent plane.
      Mat3 M = (Mat3::Identity() - m * u3.transpose() / (s4 * s4 * s4)) / s4;
      Vec3 t1 = u.cross(Vec3(u.x() < 0.9 ? 1.0 : 0.0, u.x() < 0.9 ? 0.0 : 1.0, 0.0)).normalized();
      Vec3 t2 = u.cross(t1);
      int sg[3] = {pc.s0, pc.s1, pc.s2};
      for (int k = 0; k < 3; ++k) p[k] = sg[k] * (b[k] + rho_ * m[k]);
      Vec3 Mt1 = M * t1, Mt2 = M * t2;
      T1 = Vec3(sg[0] * rho_ * Mt1[0], sg[1] * rho_ * Mt1[1], sg[2] * rho_ * Mt1[2]);
      // Scale by octant area over the uniform pdf: weight carries (pi/2) via T2.
      T2 = Vec3(sg[0] * rho_ * Mt2[0], sg[1] * rho_ * Mt2[1], sg[2] * rho_ * Mt2[2]) * (kPi / 2);
    }
    Y = center_ + p;
  }
};

inline std::shared_ptr<const Domain> make_domain(const std::string& name) {
  if (name == "ball") return std::make_shared<BallDomain>();
  if (name == "slab") return std::make_shared<SlabDomain>();
  if (name == "bump") return std::make_shared<BumpDomain>();
  throw ConfigInvalid("unknown domain: " + name);
}

}  // namespace kinlab
