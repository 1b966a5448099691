#pragma once

// Shared scalar/vector aliases, error types, and small numeric helpers.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace kinlab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// Position/velocity pair; the six phase coordinates order as (x, v).
struct PhasePoint {
  Vec3 x;
  Vec3 v;
  Vec6 as6() const {
    Vec6 q;
    q << x, v;
    return q;
  }
  static PhasePoint from6(const Vec6& q) { return {q.head<3>(), q.tail<3>()}; }
};

struct KinlabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotOnBoundary : KinlabError { using KinlabError::KinlabError; };
struct ChartMiss : KinlabError { using KinlabError::KinlabError; };
struct NotTangent : KinlabError { using KinlabError::KinlabError; };
struct DegenerateBoundary : KinlabError { using KinlabError::KinlabError; };
struct NumericalMiss : KinlabError { using KinlabError::KinlabError; };
struct GrazingRay : KinlabError { using KinlabError::KinlabError; };
struct OutOfPatch : KinlabError { using KinlabError::KinlabError; };
struct RayLeavesChart : KinlabError { using KinlabError::KinlabError; };
struct EpsTooLarge : KinlabError { using KinlabError::KinlabError; };
struct QuadratureFailure : KinlabError { using KinlabError::KinlabError; };
struct NearSingularTime : KinlabError { using KinlabError::KinlabError; };
struct GridTooCoarse : KinlabError { using KinlabError::KinlabError; };
struct DepthExhausted : KinlabError { using KinlabError::KinlabError; };
struct BudgetExceeded : KinlabError { using KinlabError::KinlabError; };
struct ConfigInvalid : KinlabError { using KinlabError::KinlabError; };
struct NoGrazingDirections : KinlabError { using KinlabError::KinlabError; };
struct EmptySampleSet : KinlabError { using KinlabError::KinlabError; };

inline double sq(double a) { return a * a; }
inline double cube(double a) { return a * a * a; }

// Mean and standard error of an accumulated sample set.
struct MeanAcc {
  double sum = 0, sumsq = 0;
  std::int64_t n = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  void merge(const MeanAcc& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n ? sum / double(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - double(n) * m * m) / double(n - 1);
    return v > 0 ? v : 0.0;
  }
  double std_error() const { return n ? std::sqrt(variance() / double(n)) : 0.0; }
};

// C^2 quintic step: 0 at t<=0, 1 at t>=1, zero first and second derivatives at both ends.
inline double smoothstep5(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  return t * t * t * (10 + t * (-15 + 6 * t));
}
inline double smoothstep5_d(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 30 * t * t * (1 - t) * (1 - t);
}
inline double smoothstep5_dd(double t) {
  if (t <= 0 || t >= 1) return 0;
  return 60 * t * (1 - t) * (1 - 2 * t);
}

}  // namespace kinlab
