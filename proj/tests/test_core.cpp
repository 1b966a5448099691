#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kinlab/core.hpp"
#include "kinlab/parallel.hpp"
#include "kinlab/quadrature.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;
using Catch::Approx;

TEST_CASE("smoothstep5 endpoints, midpoint, and derivatives") {
  REQUIRE(smoothstep5(-0.5) == 0.0);
  REQUIRE(smoothstep5(0.0) == 0.0);
  REQUIRE(smoothstep5(1.0) == 1.0);
  REQUIRE(smoothstep5(1.5) == 1.0);
  REQUIRE(smoothstep5(0.5) == Approx(0.5).margin(1e-14));

  // C2 joins: first and second derivatives vanish at the ends.
  REQUIRE(std::abs(smoothstep5_d(1e-7)) < 1e-12);
  REQUIRE(std::abs(smoothstep5_d(1.0 - 1e-7)) < 1e-12);
  REQUIRE(std::abs(smoothstep5_dd(1e-6)) < 1e-4);

  const double h = 1e-6;
  for (double t : {0.13, 0.31, 0.5, 0.77, 0.94}) {
    double fd1 = (smoothstep5(t + h) - smoothstep5(t - h)) / (2 * h);
    REQUIRE(smoothstep5_d(t) == Approx(fd1).margin(1e-8));
    double fd2 = (smoothstep5_d(t + h) - smoothstep5_d(t - h)) / (2 * h);
    REQUIRE(smoothstep5_dd(t) == Approx(fd2).margin(1e-6));
  }
}

TEST_CASE("MeanAcc moments and chunk merge") {
  MeanAcc a;
  for (double x : {1.0, 2.0, 3.0, 4.0, 5.0}) a.add(x);
  REQUIRE(a.mean() == Approx(3.0));
  REQUIRE(a.variance() == Approx(2.5));
  REQUIRE(a.std_error() == Approx(std::sqrt(2.5 / 5.0)));

  MeanAcc b, c;
  b.add(1.0);
  b.add(2.0);
  c.add(3.0);
  c.add(4.0);
  c.add(5.0);
  b.merge(c);
  REQUIRE(b.mean() == a.mean());
  REQUIRE(b.variance() == a.variance());
  REQUIRE(b.n == 5);
}

TEST_CASE("splitmix64 and fnv1a reference vectors") {
  REQUIRE(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  REQUIRE(fnv1a("") == 0xcbf29ce484222325ULL);
  REQUIRE(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng streams are deterministic and separated") {
  RngStream a(42, "alpha"), a2(42, "alpha"), b(42, "beta"), c(7, "alpha");
  REQUIRE(a.word(5, 1) == a2.word(5, 1));
  REQUIRE(a.word(5, 1) != b.word(5, 1));
  REQUIRE(a.word(5, 1) != c.word(5, 1));
  REQUIRE(a.word(5, 0) != a.word(6, 0));
  REQUIRE(a.word(5, 0) != a.word(5, 1));

  for (std::uint64_t i = 0; i < 2000; ++i) {
    double u = a.uniform(i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  double lo = a.uniform(3, 0, -2.0, 5.0);
  REQUIRE(lo >= -2.0);
  REQUIRE(lo < 5.0);
}

TEST_CASE("rng normal and sphere moments") {
  RngStream r(123, "moments");
  const std::int64_t n = 200000;
  MeanAcc m, m2;
  for (std::int64_t i = 0; i < n; ++i) {
    double g = r.normal(std::uint64_t(i));
    m.add(g);
    m2.add(g * g);
  }
  REQUIRE(std::abs(m.mean()) < 4.0 / std::sqrt(double(n)));
  REQUIRE(m2.mean() == Approx(1.0).margin(4.0 * std::sqrt(2.0 / double(n))));

  Vec3 s = Vec3::Zero();
  for (std::uint64_t i = 0; i < 5000; ++i) {
    Vec3 d = r.sphere_dir(i, 8);
    REQUIRE(d.norm() == Approx(1.0).margin(1e-12));
    s += d;
  }
  REQUIRE(s.norm() / 5000.0 < 0.05);

  MeanAcc u3;
  for (std::uint64_t i = 0; i < 20000; ++i) {
    Vec3 p = r.ball_point(i, 2.0, 16);
    REQUIRE(p.norm() <= 2.0 + 1e-12);
    u3.add(cube(p.norm() / 2.0));
  }
  // |x|^3/R^3 is uniform on (0,1) for a uniform ball point.
  REQUIRE(u3.mean() == Approx(0.5).margin(4.0 * u3.std_error() + 1e-3));
}

TEST_CASE("parallel_accumulate is bit-identical across thread counts") {
  auto run = [](int threads) {
    return parallel_accumulate<MeanAcc>(50000, threads, [](std::int64_t i, MeanAcc& acc) {
      acc.add(std::sin(0.001 * double(i)) + 1e-3 * double(i % 7));
    });
  };
  MeanAcc t1 = run(1), t2 = run(2), t5 = run(5);
  REQUIRE(t1.sum == t2.sum);  // bitwise: chunk merge order is fixed
  REQUIRE(t1.sum == t5.sum);
  REQUIRE(t1.sumsq == t5.sumsq);
  REQUIRE(t1.n == 50000);
}

TEST_CASE("adaptive simpson hits analytic integrals") {
  auto sq_ = [](double x) { return x * x; };
  REQUIRE(integrate(sq_, 0.0, 1.0) == Approx(1.0 / 3.0).margin(1e-12));
  REQUIRE(integrate([](double x) { return std::sin(x); }, 0.0, kPi) ==
          Approx(2.0).margin(1e-8));
  REQUIRE(integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          Approx(std::exp(1.0) - 1.0).epsilon(1e-8));

  // Sharp Lorentzian peak: adaptive refinement has to find the spike.
  double a = 1e-4;
  double exact = 2.0 / std::sqrt(a) * std::atan(1.0 / std::sqrt(a));
  REQUIRE(integrate([&](double x) { return 1.0 / (a + x * x); }, -1.0, 1.0, 1e-9) ==
          Approx(exact).epsilon(1e-7));
}

TEST_CASE("adaptive simpson reports unreachable tolerance") {
  // Inverse square-root singularity right on a node: the estimate never stabilizes.
  auto f = [](double x) { return 1.0 / std::sqrt(std::abs(x - 0.5)); };
  REQUIRE_THROWS_AS(integrate(f, 0.0, 1.0), QuadratureFailure);
}

TEST_CASE("gauss16 line and square are exact on polynomials") {
  REQUIRE(Gauss16::line([](double x) { return x * x * x * x * x * x * x; }, 0.0, 1.0) ==
          Approx(1.0 / 8.0).margin(1e-14));
  REQUIRE(Gauss16::line([](double x) { return x * x * x - x; }, -1.0, 2.0) ==
          Approx(2.25).margin(1e-12));
  REQUIRE(Gauss16::square([](double x, double y) { return x * x * y * y * y; }, 0.0, 1.0,
                          0.0, 1.0) == Approx(1.0 / 12.0).margin(1e-13));
}

TEST_CASE("phase point packs and unpacks") {
  PhasePoint p{Vec3(1, 2, 3), Vec3(4, 5, 6)};
  Vec6 q = p.as6();
  REQUIRE(q[0] == 1.0);
  REQUIRE(q[5] == 6.0);
  PhasePoint r = PhasePoint::from6(q);
  REQUIRE((r.x - p.x).norm() == 0.0);
  REQUIRE((r.v - p.v).norm() == 0.0);
}
