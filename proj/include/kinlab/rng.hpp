#pragma once

// Counter-based random numbers: sample i of a named stream is a pure function of
// (seed, stream name, i), so results are independent of evaluation order and thread count.

#include <cstdint>
#include <cmath>
#include <string_view>

#include "kinlab/core.hpp"

namespace kinlab {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stateless stream: draw(i) gives the i-th 64-bit word; sub-draws use lane offsets.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name)
      : key_(splitmix64(seed ^ splitmix64(fnv1a(name)))) {}

  std::uint64_t word(std::uint64_t index, std::uint64_t lane = 0) const {
    return splitmix64(key_ ^ splitmix64(index * 0x9e3779b97f4a7c15ULL + lane));
  }

  // Uniform in [0,1) with 53-bit mantissa.
  double uniform(std::uint64_t index, std::uint64_t lane = 0) const {
    return double(word(index, lane) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t index, std::uint64_t lane, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index, lane);
  }

  // Standard normal via Box-Muller; lanes (2k, 2k+1) are consumed per call.
  double normal(std::uint64_t index, std::uint64_t lane = 0) const {
    double u1 = uniform(index, 2 * lane);
    double u2 = uniform(index, 2 * lane + 1);
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * kPi * u2);
  }

  Vec3 normal3(std::uint64_t index, std::uint64_t lane_base = 0) const {
    return Vec3(normal(index, lane_base), normal(index, lane_base + 1),
                normal(index, lane_base + 2));
  }

  // Uniform on the unit sphere.
  Vec3 sphere_dir(std::uint64_t index, std::uint64_t lane_base = 0) const {
    Vec3 g = normal3(index, lane_base);
    double n = g.norm();
    if (n < 1e-300) return Vec3(1, 0, 0);
    return g / n;
  }

  // Uniform in the ball of radius R.
  Vec3 ball_point(std::uint64_t index, double R, std::uint64_t lane_base = 0) const {
    Vec3 d = sphere_dir(index, lane_base);
    double u = uniform(index, lane_base + 6);
    return R * std::cbrt(u) * d;
  }

 private:
  std::uint64_t key_;
};

}  // namespace kinlab
