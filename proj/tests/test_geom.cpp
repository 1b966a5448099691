#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "kinlab/geom.hpp"
#include "kinlab/quadrature.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;
using Catch::Approx;

namespace {

Vec3 fd_grad(const Domain& dom, const Vec3& x, double h) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    g[k] = (dom.F(x + e) - dom.F(x - e)) / (2 * h);
  }
  return g;
}

Mat3 fd_hess(const Domain& dom, const Vec3& x, double h) {
  Mat3 H;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    H.col(k) = (dom.gradF(x + e) - dom.gradF(x - e)) / (2 * h);
  }
  return 0.5 * (H + H.transpose());
}

// Probes straddling the boundary point along the normal, staying in the near-boundary band
// where the declared grad/hess bounds apply.
std::vector<Vec3> probes_near(const Domain& dom, const Vec3& xb) {
  Vec3 n = dom.outward_normal(xb);
  double s = dom.name() == "ball" ? 0.15 : 0.3;
  return {xb - s * n, xb - 0.3 * s * n, xb + 0.3 * s * n};
}

}  // namespace

TEST_CASE("make_domain knows the gallery") {
  REQUIRE(make_domain("ball")->name() == "ball");
  REQUIRE(make_domain("slab")->name() == "slab");
  REQUIRE(make_domain("bump")->name() == "bump");
  REQUIRE_THROWS_AS(make_domain("torus"), ConfigInvalid);
}

TEST_CASE("gradF and hessF match finite differences near the boundary") {
  for (const char* name : {"ball", "slab", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(2024, "fd-probes");
    double hg = 1e-6 * dom->diameter();
    double hh = 1e-5 * dom->diameter();
    int checked = 0;
    for (std::uint64_t i = 0; i < 80; ++i) {
      Vec3 xb = dom->boundary_sample(rng, i).x;
      // The slab profile has a kink on the midplane; keep FD stencils away from it.
      for (const Vec3& x : probes_near(*dom, xb)) {
        if (dom->name() == "slab" && std::abs(x.z() - 0.5) < 0.1) continue;
        Vec3 g = dom->gradF(x);
        REQUIRE((g - fd_grad(*dom, x, hg)).norm() < 1e-6 * dom->grad_bound());
        Mat3 H = dom->hessF(x);
        Mat3 Hfd = fd_hess(*dom, x, hh);
        REQUIRE((H - Hfd).norm() < 5e-3);
        ++checked;
      }
    }
    REQUIRE(checked > 150);
  }
}

TEST_CASE("declared gradient and hessian bounds hold near the boundary") {
  for (const char* name : {"ball", "slab", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(7, "bound-probes");
    for (std::uint64_t i = 0; i < 400; ++i) {
      Vec3 xb = dom->boundary_sample(rng, i).x;
      for (const Vec3& x : probes_near(*dom, xb)) {
        REQUIRE(dom->gradF(x).norm() <= dom->grad_bound());
        // hess_bound caps the directional curvature v'Hv, i.e. the operator norm.
        REQUIRE(dom->hessF(x).operatorNorm() <= dom->hess_bound());
      }
    }
  }
}

TEST_CASE("boundary samples lie on the zero set with outward normals") {
  for (const char* name : {"ball", "slab", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(99, "surface");
    double step = 1e-4 * dom->diameter();
    for (std::uint64_t i = 0; i < 500; ++i) {
      BoundarySample s = dom->boundary_sample(rng, i);
      REQUIRE(std::abs(dom->F(s.x)) < 1e-9 * dom->diameter());
      REQUIRE(s.weight > 0.0);
      Vec3 n = dom->outward_normal(s.x);
      REQUIRE(dom->F(s.x + step * n) > 0.0);
      REQUIRE(dom->F(s.x - step * n) < 0.0);
    }
  }
}

TEST_CASE("bump dimple profile hits its designed values") {
  double e1 = std::exp(-1.0);
  REQUIRE(BumpDomain::eta(0.0, 0.0) == Approx(-0.5).margin(1e-15));
  REQUIRE(BumpDomain::eta(1.0, 0.0) == Approx(-0.5 * e1).margin(1e-15));
  REQUIRE(std::abs(BumpDomain::eta(2.3, 0.0)) < 1e-15);  // support edge, fp noise only
  REQUIRE(BumpDomain::eta(2.35, 0.0) == 0.0);
  REQUIRE(BumpDomain::eta(3.0, 1.0) == 0.0);

  // At (1,0) the cap is still identically 1, so the Gaussian derivatives are exact:
  // radially concave (-1/e), azimuthally convex (+1/e) - a saddle ring.
  Mat2 H = BumpDomain::eta_hess(1.0, 0.0);
  REQUIRE(H(0, 0) == Approx(-e1).margin(1e-14));
  REQUIRE(H(1, 1) == Approx(e1).margin(1e-14));
  REQUIRE(H(0, 1) == Approx(0.0).margin(1e-14));
  // Center of the pocket: strictly convex from inside (eta_rr = +1 both ways).
  Mat2 H0 = BumpDomain::eta_hess(0.0, 0.0);
  REQUIRE(H0(0, 0) == Approx(1.0).margin(1e-14));
  REQUIRE(H0(1, 1) == Approx(1.0).margin(1e-14));

  // Gradient/hessian of the profile agree with finite differences, including across the
  // cap junctions at r = 1.3 and r = 2.3.
  double h = 1e-6;
  for (double x : {0.2, 0.9, 1.29, 1.5, 2.0, 2.29}) {
    for (double y : {0.0, 0.4, 1.1}) {
      Vec2 g = BumpDomain::eta_grad(x, y);
      double gx = (BumpDomain::eta(x + h, y) - BumpDomain::eta(x - h, y)) / (2 * h);
      double gy = (BumpDomain::eta(x, y + h) - BumpDomain::eta(x, y - h)) / (2 * h);
      REQUIRE(g.x() == Approx(gx).margin(1e-8));
      REQUIRE(g.y() == Approx(gy).margin(1e-8));
      Mat2 Hn = BumpDomain::eta_hess(x, y);
      double hf = 1e-5;
      double hxx = (BumpDomain::eta_grad(x + hf, y).x() - BumpDomain::eta_grad(x - hf, y).x()) / (2 * hf);
      double hxy = (BumpDomain::eta_grad(x, y + hf).x() - BumpDomain::eta_grad(x, y - hf).x()) / (2 * hf);
      REQUIRE(Hn(0, 0) == Approx(hxx).margin(1e-7));
      REQUIRE(Hn(0, 1) == Approx(hxy).margin(1e-7));
    }
  }
}

TEST_CASE("bump floor is the dimple graph and the ceiling stays flat") {
  auto dom = make_domain("bump");
  // Deepest floor point: (0,0,-0.5) is on the boundary.
  REQUIRE(std::abs(dom->F(Vec3(0, 0, -0.5))) < 1e-12);
  REQUIRE(std::abs(dom->F(Vec3(1, 0, -0.5 * std::exp(-1.0)))) < 1e-12);
  // Outside the dimple support the floor sits at z = 0.
  REQUIRE(std::abs(dom->F(Vec3(2.4, 0, 0))) < 1e-12);
  // Ceiling: flat plane z = 7.14, normal +e3, zero curvature (shear died out below).
  Vec3 top(0.3, -1.1, 7.14);
  REQUIRE(std::abs(dom->F(top)) < 1e-12);
  Vec3 ntop = dom->outward_normal(top);
  REQUIRE((ntop - Vec3(0, 0, 1)).norm() < 1e-12);
  REQUIRE(dom->hessF(top).norm() < 1e-12);
  // Floor normal at the saddle ring tilts toward the pocket axis.
  Vec3 p(1, 0, -0.5 * std::exp(-1.0));
  Vec3 nf = dom->outward_normal(p);
  REQUIRE(nf.z() < 0.0);
  REQUIRE(nf.x() > 0.1);  // eta increases outward at r=1, so n leans +x below the floor
}

TEST_CASE("bump shear inversion round-trips") {
  for (double et : {-0.5, -0.2, -0.03}) {
    for (double u3 : {0.0, 0.4, 1.7, 3.0}) {
      double x3 = BumpDomain::solve_world_z(et, u3);
      REQUIRE(x3 - et * BumpDomain::shear_w(x3) == Approx(u3).margin(1e-12));
    }
  }
}

TEST_CASE("bump sampler reproduces ceiling and floor areas") {
  auto dom = make_domain("bump");
  RngStream rng(31337, "area-mc");
  const std::int64_t n = 400000;
  MeanAcc top, floor_m;
  for (std::int64_t i = 0; i < n; ++i) {
    BoundarySample s = dom->boundary_sample(rng, std::uint64_t(i));
    // The rim blends are quartically tangent to the plates, so carve the flat faces out by
    // their lateral extent (rim and corner points a.s. satisfy |x1| or |x2| > 2.43).
    bool core = std::abs(s.x.x()) < 2.43 && std::abs(s.x.y()) < 2.43;
    top.add(core && s.x.z() > 7.0 ? s.weight : 0.0);
    floor_m.add(core && s.x.z() < 0.1 ? s.weight : 0.0);
  }
  double top_exact = 4.0 * 2.43 * 2.43;
  REQUIRE(top.mean() == Approx(top_exact).margin(4.0 * top.std_error()));

  double floor_exact = integrate(
      [&](double x) {
        return integrate(
            [&](double y) {
              Vec2 g = BumpDomain::eta_grad(x, y);
              return std::sqrt(1.0 + g.squaredNorm());
            },
            -2.43, 2.43, 1e-9);
      },
      -2.43, 2.43, 1e-9);
  REQUIRE(floor_exact > top_exact);  // dimple adds area
  REQUIRE(floor_m.mean() == Approx(floor_exact).margin(4.0 * floor_m.std_error()));
}

TEST_CASE("slab sampler splits mass between the two plates") {
  auto dom = make_domain("slab");
  RngStream rng(5, "slab-mc");
  const std::int64_t n = 100000;
  MeanAcc total, top;
  for (std::int64_t i = 0; i < n; ++i) {
    BoundarySample s = dom->boundary_sample(rng, std::uint64_t(i));
    REQUIRE((s.x.z() == 0.0 || s.x.z() == 1.0));
    total.add(s.weight);
    top.add(s.x.z() == 1.0 ? s.weight : 0.0);
  }
  REQUIRE(total.mean() == Approx(8.0).margin(1e-12));  // constant weight
  REQUIRE(top.mean() == Approx(4.0).margin(4.0 * top.std_error()));
}

TEST_CASE("slab periodic identifications") {
  auto dom = make_domain("slab");
  REQUIRE(dom->periodic());
  REQUIRE((dom->wrap(Vec3(2.3, -0.4, 0.7)) - Vec3(0.3, 1.6, 0.7)).norm() < 1e-12);
  Vec3 d = dom->min_image(Vec3(1.9, 0.05, 0.3), Vec3(0.1, 1.95, 0.8));
  REQUIRE(d.x() == Approx(-0.2).margin(1e-12));
  REQUIRE(d.y() == Approx(0.1).margin(1e-12));
  REQUIRE(d.z() == Approx(-0.5).margin(1e-12));
  // Non-periodic domains report zero period and plain differences.
  auto ball = make_domain("ball");
  REQUIRE(ball->period().norm() == 0.0);
  REQUIRE((ball->min_image(Vec3(1, 2, 3), Vec3(0, 0, 1)) - Vec3(1, 2, 2)).norm() == 0.0);
}

TEST_CASE("ball closed forms") {
  auto dom = make_domain("ball");
  REQUIRE(*dom->volume_closed_form() == Approx(4.0 * kPi / 3.0));
  Vec3 x(0.3, 0, 0);
  Vec3 d(1, 0, 0);
  REQUIRE(*dom->exit_arclength_closed_form(x, d) == Approx(0.7).margin(1e-14));
  REQUIRE(*dom->exit_arclength_closed_form(x, -d) == Approx(1.3).margin(1e-14));
  RngStream rng(11, "ball-area");
  MeanAcc a;
  for (std::uint64_t i = 0; i < 20000; ++i) a.add(dom->boundary_sample(rng, i).weight);
  REQUIRE(a.mean() == Approx(4.0 * kPi).margin(1e-12));
}
