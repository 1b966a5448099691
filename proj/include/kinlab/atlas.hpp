#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "kinlab/chart.hpp"
#include "kinlab/core.hpp"
#include "kinlab/geom.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

// Chart cover of the boundary. Charts are placed on a deterministic net: each
// boundary patch is subdivided until every cell is small against the scale of
// the chart claiming its center, creating charts where no claim reaches. The
// chart half-width starts at the requested delta and halves wherever the 1/8
// slope bound fails, so the cover is multi-scale: large charts on flats, small
// ones across blends and the pocket. A cell of world diameter <= delta/4 whose
// center lies within the claim disc (0.70 delta) sits entirely within in-plane
// radius 0.825 delta and height 0.25 delta of that chart, so every boundary
// point is well interior to some patch by construction; a sampling audit
// verifies this at the end.
class Atlas {
 public:
  static constexpr double kSpacingFrac = 0.70;

  const Domain& domain() const { return *dom_; }
  double delta_request() const { return delta0_; }
  const std::vector<BoundaryChart>& charts() const { return charts_; }

  // Global chart-regularity constants, measured over all patches.
  double c_eta() const { return c_eta_; }
  double slope_max() const { return slope_max_; }
  double kappa_concave() const { return kappa_concave_; }
  double delta_min_built() const { return delta_min_built_; }

  // Index of the chart whose patch contains x most interiorly, or -1. The
  // point need not be exactly on the boundary; `pad` loosens the height test.
  int owner_chart(const Vec3& x, double pad = 0.0) const {
    int best = -1;
    double best_ratio = kInf;
    visit_nearby(x, [&](int ci) {
      const BoundaryChart& ch = charts_[ci];
      Vec3 z = ch.coords(x);
      double ratio = std::max(std::abs(z[0]), std::abs(z[1])) / ch.delta();
      if (ratio >= 0.999) return;
      if (std::abs(z[2]) > 0.46 * ch.delta() + pad) return;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best = ci;
      }
    });
    return best;
  }

  // All charts whose patch plausibly contains x (same test as owner_chart).
  std::vector<int> charts_near(const Vec3& x, double pad = 0.0) const {
    std::vector<int> out;
    visit_nearby(x, [&](int ci) {
      const BoundaryChart& ch = charts_[ci];
      Vec3 z = ch.coords(x);
      if (std::max(std::abs(z[0]), std::abs(z[1])) >= ch.delta()) return;
      if (std::abs(z[2]) > 0.46 * ch.delta() + pad) return;
      out.push_back(ci);
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  static const Atlas& get(const std::shared_ptr<const Domain>& dom, double delta0);

 private:
  Atlas(std::shared_ptr<const Domain> dom, double delta0)
      : dom_(std::move(dom)), delta0_(delta0) {
    build();
  }

  void build() {
    const Domain& dom = *dom_;
    const double delta_min = 1e-4 * dom.diameter();

    for (const BoundaryPatch& patch : dom.boundary_patches())
      net_refine(patch, patch.u0, patch.u1, patch.v0, patch.v1, 0, delta_min);

    // Coverage audit: fresh boundary samples must all sit well inside some
    // patch; any miss gets plugged and flooded (up to a few rounds).
    RngStream audit(0xa0d17ULL, "atlas-audit");
    std::deque<Vec3> frontier;
    for (int round = 0; round < 8; ++round) {
      bool all_in = true;
      long miss_count = 0;
      Vec3 last_miss = Vec3::Zero();
      for (std::uint64_t i = 0; i < 20000; ++i) {
        Vec3 p = dom.boundary_sample(audit, i + 100000ULL * round).x;
        if (owner_chart(p) < 0) {
          all_in = false;
          ++miss_count;
          last_miss = p;
          frontier.push_back(p);
        }
      }
#ifdef KINLAB_ATLAS_DEBUG
      std::fprintf(stderr, "[atlas %s] round %d: charts=%zu misses=%ld last=(%g,%g,%g)\n",
                   dom.name().c_str(), round, charts_.size(), miss_count, last_miss.x(),
                   last_miss.y(), last_miss.z());
#endif
      if (all_in) return;
      while (!frontier.empty()) {
        Vec3 p = frontier.front();
        frontier.pop_front();
        if (covered(p)) continue;
        const BoundaryChart& ch = charts_[add_chart(p, delta_min)];
        // Flood around the plug: point plugs alone close multi-scale slivers
        // too slowly (the plug claim is small where the scale halved).
        double step = kSpacingFrac * ch.delta();
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            frontier.push_back(ch.graph_point(di * step, dj * step));
          }
      }
    }
#ifdef KINLAB_ATLAS_DEBUG
    std::fprintf(stderr, "[atlas %s] WARNING: audit still failing, keeping atlas for debug\n",
                 dom.name().c_str());
    return;
#else
    throw DegenerateBoundary("atlas: coverage audit failed after extension rounds");
#endif
  }

  // Subdivide a parameter cell until its world diameter is small against the
  // scale of the chart claiming its center, creating that chart if missing.
  // Every boundary point then lies in some final cell, and the witness chart
  // of that cell's center owns the whole cell with margin.
  void net_refine(const BoundaryPatch& patch, double u0, double u1, double v0, double v1,
                  int depth, double delta_min) {
    double um = 0.5 * (u0 + u1), vm = 0.5 * (v0 + v1);
    Vec3 c = patch.world(um, vm);
    double reach = 0.0;
    for (double u : {u0, u1})
      for (double v : {v0, v1})
        reach = std::max(reach, dom_->min_image(patch.world(u, v), c).norm());
    double diam_w = 2.6 * reach;  // corner reach doubled plus slack for edge bulge

    double scale = claimed_delta(c);
    if (scale == 0.0) scale = charts_[add_chart(c, delta_min)].delta();
    if (diam_w <= 0.25 * scale) return;
    if (depth >= 30) throw DegenerateBoundary("atlas: net refinement failed to terminate");
    net_refine(patch, u0, um, v0, vm, depth + 1, delta_min);
    net_refine(patch, um, u1, v0, vm, depth + 1, delta_min);
    net_refine(patch, u0, um, vm, v1, depth + 1, delta_min);
    net_refine(patch, um, u1, vm, v1, depth + 1, delta_min);
  }

  // Largest chart scale whose claim disc contains p, or 0 when unclaimed.
  double claimed_delta(const Vec3& p) const {
    double best = 0.0;
    visit_nearby(p, [&](int ci) {
      const BoundaryChart& ch = charts_[ci];
      if (ch.delta() <= best) return;
      Vec3 z = ch.coords(p);
      if (z.head<2>().norm() < kSpacingFrac * ch.delta() &&
          std::abs(z[2]) < 0.46 * ch.delta())
        best = ch.delta();
    });
    return best;
  }

  int add_chart(const Vec3& p, double delta_min) {
    double d = delta0_;
    std::optional<BoundaryChart> ch;
    while (d >= delta_min) {
      ch = try_make_chart(*dom_, p, d);
      if (ch) break;
      d *= 0.5;
    }
    if (!ch) throw DegenerateBoundary("atlas: chart construction failed at delta_min");
    int ci = static_cast<int>(charts_.size());
    charts_.push_back(*ch);
    hash_insert(ci);
    c_eta_ = std::max(c_eta_, ch->eta_c2);
    slope_max_ = std::max(slope_max_, ch->slope_max);
    kappa_concave_ = std::max(kappa_concave_, ch->kappa_concave);
    delta_min_built_ = std::min(delta_min_built_, ch->delta());
    if (charts_.size() > 500000) throw DegenerateBoundary("atlas: chart count runaway");
    return ci;
  }

  // Claims are in-plane discs: neighboring charts' frames rotate along blends, and
  // rotated square claims leave diagonal slivers that point plugs never exhaust.
  bool covered(const Vec3& p) const {
    bool hit = false;
    visit_nearby(p, [&](int ci) {
      if (hit) return;
      const BoundaryChart& ch = charts_[ci];
      Vec3 z = ch.coords(p);
      double claim = kSpacingFrac * ch.delta();
      if (z.head<2>().norm() < claim && std::abs(z[2]) < 0.46 * ch.delta()) hit = true;
    });
    return hit;
  }

  // Multi-level spatial hash: one grid per halving level, cell edge 2 delta.
  // Periodic domains store periodic images of each chart near the seam so
  // wrapped queries always find them.
  struct Key {
    int level;
    long ix, iy, iz;
    bool operator==(const Key& o) const {
      return level == o.level && ix == o.ix && iy == o.iy && iz == o.iz;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.level);
      h = splitmix64(h ^ static_cast<std::uint64_t>(k.ix));
      h = splitmix64(h ^ static_cast<std::uint64_t>(k.iy));
      h = splitmix64(h ^ static_cast<std::uint64_t>(k.iz));
      return static_cast<std::size_t>(h);
    }
  };

  int level_of(double delta) const {
    return static_cast<int>(std::lround(std::log2(delta0_ / delta)));
  }
  double level_delta(int lv) const { return delta0_ * std::pow(0.5, lv); }

  Key key_for(int level, const Vec3& p) const {
    double h = 2.0 * level_delta(level);
    return {level, static_cast<long>(std::floor(p.x() / h)),
            static_cast<long>(std::floor(p.y() / h)),
            static_cast<long>(std::floor(p.z() / h))};
  }

  void hash_insert(int ci) {
    const BoundaryChart& ch = charts_[ci];
    int lv = level_of(ch.delta());
    levels_seen_ = std::max(levels_seen_, lv + 1);
    Vec3 base = dom_->wrap(ch.origin());
    Vec3 per = dom_->period();
    for (int ix = (per.x() > 0 ? -1 : 0); ix <= (per.x() > 0 ? 1 : 0); ++ix)
      for (int iy = (per.y() > 0 ? -1 : 0); iy <= (per.y() > 0 ? 1 : 0); ++iy) {
        Vec3 img = base + Vec3(ix * per.x(), iy * per.y(), 0.0);
        auto& cell = grid_[key_for(lv, img)];
        if (std::find(cell.begin(), cell.end(), ci) == cell.end()) cell.push_back(ci);
      }
  }

  template <class Fn>
  void visit_nearby(const Vec3& p_in, Fn&& fn) const {
    Vec3 p = dom_->wrap(p_in);
    for (int lv = 0; lv < levels_seen_; ++lv) {
      Key base = key_for(lv, p);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = grid_.find({lv, base.ix + dx, base.iy + dy, base.iz + dz});
            if (it == grid_.end()) continue;
            for (int ci : it->second) fn(ci);
          }
    }
  }

  std::shared_ptr<const Domain> dom_;
  double delta0_;
  std::vector<BoundaryChart> charts_;
  std::unordered_map<Key, std::vector<int>, KeyHash> grid_;
  int levels_seen_ = 0;
  double c_eta_ = 0.0;
  double slope_max_ = 0.0;
  double kappa_concave_ = 0.0;
  double delta_min_built_ = kInf;
};

// Atlases are deterministic for a given (domain, delta) and expensive to
// build, so they are cached per process.
inline const Atlas& Atlas::get(const std::shared_ptr<const Domain>& dom, double delta0) {
  static std::mutex mu;
  static std::map<std::pair<std::string, double>, std::unique_ptr<Atlas>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dom->name(), delta0);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::unique_ptr<Atlas>(new Atlas(dom, delta0))).first;
  }
  return *it->second;
}

}  // namespace kinlab
