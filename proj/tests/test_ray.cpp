#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kinlab/geom.hpp"
#include "kinlab/ray.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;
using Catch::Approx;

namespace {

// Rejection-sample a point with some clearance from the boundary.
Vec3 interior_point(const Domain& dom, const RngStream& rng, std::uint64_t i, double clearance) {
  Aabb bb = dom.box();
  for (std::uint64_t k = 0; k < 10000; ++k) {
    Vec3 x;
    for (int c = 0; c < 3; ++c)
      x[c] = rng.uniform(i, 40 + 3 * k + std::uint64_t(c), bb.lo[c], bb.hi[c]);
    if (dom.F(x) < -clearance) return x;
  }
  throw NumericalMiss("interior_point: rejection failed");
}

}  // namespace

TEST_CASE("marched ball exits match the closed form") {
  auto dom = make_domain("ball");
  RngStream rng(101, "ball-exits");
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Vec3 x = rng.ball_point(i, 0.9);
    Vec3 d = rng.sphere_dir(i, 10);
    ExitRecord rec = exit_along(*dom, x, d);
    REQUIRE(!rec.never_exits);
    double exact = *dom->exit_arclength_closed_form(x, d);
    REQUIRE(rec.arclength == Approx(exact).margin(1e-9 * dom->diameter()));
    REQUIRE(std::abs(dom->F(rec.x_exit)) < 1e-10);
  }
}

TEST_CASE("marched slab exits match the closed form; horizontal rays never exit") {
  auto dom = make_domain("slab");
  RngStream rng(102, "slab-exits");
  for (std::uint64_t i = 0; i < 100; ++i) {
    Vec3 x(rng.uniform(i, 0, 0.0, 2.0), rng.uniform(i, 1, 0.0, 2.0),
           rng.uniform(i, 2, 0.05, 0.95));
    Vec3 d = rng.sphere_dir(i, 10);
    if (std::abs(d.z()) < 0.05) continue;
    ExitRecord rec = exit_along(*dom, x, d);
    REQUIRE(rec.arclength == Approx(*dom->exit_arclength_closed_form(x, d))
                                 .margin(1e-9 * dom->diameter()));
  }

  // Marched: "never" is only declared at the path cap, and says so.
  Vec3 x(1.0, 1.0, 0.37);
  Vec3 v(1.0, 0.3, 0.0);
  ExitRecord marched = backward_exit(*dom, x, v);
  REQUIRE(marched.never_exits);
  REQUIRE(marched.path_capped);
  REQUIRE(marched.t == kInf);
  // Closed form: "never" is proved, not capped.
  ExitRecord fast = exit_fast(*dom, x, v, true);
  REQUIRE(fast.never_exits);
  REQUIRE(!fast.path_capped);
}

TEST_CASE("exit along a dense-march oracle agrees on random chords") {
  for (const char* name : {"ball", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(103, "dense-oracle");
    int compared = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
      Vec3 x = interior_point(*dom, rng, i, 0.05 * dom->diameter() * 0.01);
      Vec3 d = rng.sphere_dir(i, 20);
      ExitRecord rec = exit_along(*dom, x, d);
      if (rec.never_exits || rec.tangential_touch) continue;
      auto dense = dense_exit_arclength(*dom, x, d, 1e-4 * dom->diameter(),
                                        rec.arclength + 0.01 * dom->diameter());
      REQUIRE(dense.has_value());
      REQUIRE(rec.arclength == Approx(*dense).margin(1e-8 * dom->diameter()));
      ++compared;
    }
    REQUIRE(compared > 80);
  }
}

TEST_CASE("exit time scales inversely with speed") {
  for (const char* name : {"ball", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(104, "speed-scaling");
    for (std::uint64_t i = 0; i < 50; ++i) {
      Vec3 x = interior_point(*dom, rng, i, 0.01);
      Vec3 v = rng.sphere_dir(i, 20) * rng.uniform(i, 30, 0.3, 2.0);
      ExitRecord a = backward_exit(*dom, x, v);
      ExitRecord b = backward_exit(*dom, x, 3.0 * v);
      if (a.never_exits) {
        REQUIRE(b.never_exits);
        continue;
      }
      REQUIRE(a.t == Approx(3.0 * b.t).margin(1e-9 * dom->diameter() / v.norm()));
      REQUIRE(a.arclength == Approx(b.arclength).margin(1e-9 * dom->diameter()));
    }
  }
}

TEST_CASE("forward and backward exits are involutive across a chord") {
  for (const char* name : {"ball", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(105, "involution");
    int checked = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      Vec3 x = interior_point(*dom, rng, i, 0.01);
      Vec3 v = rng.sphere_dir(i, 20);
      ExitRecord fwd = forward_exit(*dom, x, v);
      if (fwd.never_exits || fwd.tangential_touch) continue;
      if (std::abs(dom->outward_normal(fwd.x_exit).dot(v)) < 0.05) continue;
      // Walk backward from the forward exit point: lands on the chord's entry point,
      // and the forward exit from there recovers the same exit.
      ExitRecord back = backward_exit(*dom, fwd.x_exit, v);
      if (back.never_exits || back.tangential_touch) continue;
      REQUIRE(back.on_boundary_start);
      Vec3 entry = fwd.x_exit - back.arclength * v.normalized();
      REQUIRE(std::abs(dom->F(entry)) < 1e-7 * dom->diameter());
      ExitRecord again = forward_exit(*dom, entry, v);
      REQUIRE((again.x_exit - fwd.x_exit).norm() < 1e-7 * dom->diameter());
      ++checked;
    }
    REQUIRE(checked > 100);
  }
}

TEST_CASE("rays tangent to the pocket re-enter; rays tangent to convex walls leave") {
  auto dom = make_domain("bump");
  double e1 = std::exp(-1.0);
  Vec3 p(1.0, 0.0, -0.5 * e1);              // saddle ring of the dimple
  Vec3 u_out = Vec3(1.0, 0.0, e1).normalized();  // radial floor tangent, outward
  Vec3 n = dom->outward_normal(p);

  // Launch outside the pocket aiming back at the tangency point.
  Vec3 x0 = p + 0.8 * u_out;
  REQUIRE(dom->F(x0) < 0.0);
  Vec3 d = -u_out;

  SECTION("exact tangency is a terminating touch at the tangency point") {
    ExitRecord rec = exit_along(*dom, x0, d);
    REQUIRE(!rec.never_exits);
    REQUIRE(rec.arclength == Approx(0.8).margin(1e-4));
    REQUIRE((rec.x_exit - p).norm() < 1e-3);
  }

  SECTION("aiming a hair outside the surface exits right there") {
    ExitRecord rec = exit_along(*dom, x0 + 1e-7 * n, d);
    REQUIRE(!rec.never_exits);
    REQUIRE((rec.x_exit - p).norm() < 5e-3);
  }

  SECTION("aiming a hair inside skims the pocket and travels on") {
    ExitRecord rec = exit_along(*dom, x0 - 1e-7 * n, d);
    REQUIRE(!rec.never_exits);
    REQUIRE(!rec.tangential_touch);
    REQUIRE((rec.x_exit - p).norm() > 0.5);  // crosses the pocket before leaving
  }

  SECTION("tangent start on the concave ring marches into the pocket") {
    ExitRecord rec = exit_along(*dom, p, -u_out);
    REQUIRE(rec.on_boundary_start);
    REQUIRE(!rec.never_exits);
    REQUIRE(rec.arclength > 0.3);
    REQUIRE(rec.arclength < 3.0);
  }

  SECTION("tangent start in the convex azimuthal direction leaves immediately") {
    ExitRecord rec = exit_along(*dom, p, Vec3(0, 1, 0));
    REQUIRE(rec.on_boundary_start);
    REQUIRE(rec.tangential_touch);
    REQUIRE(rec.arclength == 0.0);
  }
}

TEST_CASE("boundary starts resolve by slope sign") {
  auto dom = make_domain("ball");
  Vec3 x(1, 0, 0);
  ExitRecord out = exit_along(*dom, x, Vec3(1, 0, 0));
  REQUIRE(out.on_boundary_start);
  REQUIRE(out.arclength == 0.0);

  ExitRecord in = exit_along(*dom, x, Vec3(-1, 0, 0));
  REQUIRE(in.on_boundary_start);
  REQUIRE(in.arclength == Approx(2.0).margin(1e-9));

  ExitRecord tang = exit_along(*dom, x, Vec3(0, 1, 0));
  REQUIRE(tang.tangential_touch);
  REQUIRE(tang.arclength == 0.0);

  REQUIRE_THROWS_AS(exit_along(*dom, Vec3(1.1, 0, 0), Vec3(-1, 0, 0)), NotOnBoundary);
}

TEST_CASE("zero velocity never exits") {
  auto dom = make_domain("ball");
  REQUIRE(backward_exit(*dom, Vec3(0.2, 0, 0), Vec3::Zero()).never_exits);
  REQUIRE(forward_exit(*dom, Vec3(0.2, 0, 0), Vec3::Zero()).never_exits);
  REQUIRE(exit_fast(*dom, Vec3(0.2, 0, 0), Vec3::Zero(), true).never_exits);
}

TEST_CASE("exit_fast matches the marched tracer where closed forms exist") {
  for (const char* name : {"ball", "slab", "bump"}) {
    auto dom = make_domain(name);
    RngStream rng(106, "fast-vs-marched");
    for (std::uint64_t i = 0; i < 50; ++i) {
      Vec3 x = interior_point(*dom, rng, i, 0.01);
      Vec3 v = rng.sphere_dir(i, 20);
      if (dom->name() == "slab" && std::abs(v.z()) < 0.05) continue;
      ExitRecord a = exit_fast(*dom, x, v, false);
      ExitRecord b = forward_exit(*dom, x, v);
      REQUIRE(a.never_exits == b.never_exits);
      if (!a.never_exits)
        REQUIRE(a.arclength == Approx(b.arclength).margin(1e-9 * dom->diameter()));
    }
  }
}

TEST_CASE("grazing classification covers all five verdicts") {
  auto ball = make_domain("ball");
  Vec3 top(0, 0, 1);
  REQUIRE(grazing_classify(*ball, top, Vec3(0, 0, -1)) == GrazeClass::Incoming);
  REQUIRE(grazing_classify(*ball, top, Vec3(0.3, 0, 1)) == GrazeClass::Outgoing);
  REQUIRE(grazing_classify(*ball, top, Vec3(1, 0, 0)) == GrazeClass::GrazingConvex);

  auto slab = make_domain("slab");
  REQUIRE(grazing_classify(*slab, Vec3(1, 1, 0), Vec3(1, 0, 0)) == GrazeClass::GrazingFlat);

  auto bump = make_domain("bump");
  double e1 = std::exp(-1.0);
  Vec3 p(1.0, 0.0, -0.5 * e1);
  REQUIRE(grazing_classify(*bump, p, Vec3(1.0, 0.0, e1)) == GrazeClass::GrazingConcave);
  REQUIRE(grazing_classify(*bump, p, Vec3(0, 1, 0)) == GrazeClass::GrazingConvex);
  Vec3 ceil_pt(0.3, -1.1, 7.14);
  REQUIRE(grazing_classify(*bump, ceil_pt, Vec3(0, 1, 0)) == GrazeClass::GrazingFlat);
}

TEST_CASE("exit derivatives match finite differences on transversal rays") {
  auto dom = make_domain("ball");
  RngStream rng(107, "exit-derivs");
  int checked = 0;
  for (std::uint64_t i = 0; i < 60 && checked < 20; ++i) {
    Vec3 x = rng.ball_point(i, 0.8);
    Vec3 v = rng.sphere_dir(i, 10) * rng.uniform(i, 20, 0.5, 1.5);
    ExitRecord rec = backward_exit(*dom, x, v);
    double mu = std::abs(dom->outward_normal(rec.x_exit).dot(v.normalized()));
    if (mu < 0.3) continue;
    ExitDerivatives der = exit_derivatives(*dom, x, v);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      double tp = backward_exit(*dom, x + e, v).t;
      double tm = backward_exit(*dom, x - e, v).t;
      REQUIRE(der.dt_dx[k] == Approx((tp - tm) / (2 * h)).margin(1e-5 * (1 + std::abs(der.dt_dx[k]))));
      Vec3 xp = backward_exit(*dom, x + e, v).x_exit;
      Vec3 xm = backward_exit(*dom, x - e, v).x_exit;
      REQUIRE((der.dxb_dx.col(k) - (xp - xm) / (2 * h)).norm() < 1e-4);

      double tvp = backward_exit(*dom, x, v + e).t;
      double tvm = backward_exit(*dom, x, v - e).t;
      REQUIRE(der.dt_dv[k] == Approx((tvp - tvm) / (2 * h)).margin(1e-5 * (1 + std::abs(der.dt_dv[k]))));
      Vec3 xvp = backward_exit(*dom, x, v + e).x_exit;
      Vec3 xvm = backward_exit(*dom, x, v - e).x_exit;
      REQUIRE((der.dxb_dv.col(k) - (xvp - xvm) / (2 * h)).norm() < 1e-4);
    }
    ++checked;
  }
  REQUIRE(checked == 20);
}

TEST_CASE("exit derivatives refuse grazing rays") {
  auto dom = make_domain("ball");
  Vec3 x(0, 0, 1.0 - 1e-9);
  REQUIRE_THROWS_AS(exit_derivatives(*dom, x, Vec3(1, 0, 0)), GrazingRay);
}
