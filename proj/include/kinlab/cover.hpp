#pragma once

// Tube cover of the grazing set, built on the chart atlas.
//
// Each chart carries a lattice of cells at spacing eps; a cell owns a launch
// rectangle of half-width eps1 around its center, a frame fixed at the cell
// center (outward normal n_c plus a tangent pair), and for every azimuth
// window of width 2 eps1 around sector angles eps*l a swept tube
//
//   tube = { launch(z) + tau d(theta) + s n_c :
//            z in rectangle, theta in window, s in (-eps, eps),
//            tau in [0, forward exit length of launch(z) along d(theta)] }
//
// with d(theta) = cos(theta) x1hat + sin(theta) x2hat. The cover is the union
// over cells and windows of (tube dilated by eps1) x (velocity sector), plus
// the low-speed component R^3 x B(0; eps1). A velocity lies in the sector of
// window l when its azimuth in the cell frame is within eps1 of eps*l and its
// normal component passes |v . n_c| < 8 C_eta eps1 (|v| <= 1) or
// |v^ . n_c| < 8 C_eta eps1 (|v| >= 1).
//
// Membership is decided against this definition in tiers that only differ in
// how candidate cells are found; every accept is certified by minimizing the
// exact point-to-tube distance over (launch, theta) with the forward-exit cap
// checked by tracing. The tiers: a closed-form accept for the low-speed
// ball; cells around the boundary projection of x (the collar, tau ~ 0 part
// of every tube); tangency feet seen by marching along -+v^ (chords nearly
// parallel to v); and a silhouette search for the general deep case, seeded
// on a precomputed net over boundary regions whose tangent planes dive into
// the domain, since only those regions launch chords that leave the collar.
// The tube minimization is a grid plus pattern search refined to eps1/100,
// so verdicts within about 0.1% of the tube surface may fall either way, and
// the candidate generation is search-based, so a membership whose witnesses
// all sit beyond the documented walk and budget caps can be missed; sampled
// checks quote margins far above both bands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "kinlab/atlas.hpp"
#include "kinlab/chart.hpp"
#include "kinlab/core.hpp"
#include "kinlab/geom.hpp"
#include "kinlab/parallel.hpp"
#include "kinlab/ray.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/singular.hpp"

namespace kinlab {

struct CoverParams {
  double eps = 0.0;        // lattice spacing, sector spacing, normal half-thickness
  double eps1 = 0.0;       // rectangle / window / dilation half-width, >= eps
  double delta = 0.0;      // nominal chart half-width the atlas is built at
  double c_eta = 0.0;      // measured sup |d11 eta| + |d22 eta| + |d12 eta|
  double c_star = 10.0;    // inflation factor for the nesting target
  double s_star = 10.0;    // alignment margin in the cone-lemma hypothesis
  double theta_w = 0.125;  // Gaussian weight exponent in the measures
  double v_max = 6.0;      // speed cap for uniform-ball proposals

  void validate() const {
    if (!(eps > 0.0) || !(eps1 > 0.0) || !(delta > 0.0))
      throw ConfigInvalid("cover: eps, eps1, delta must be positive");
    if (!(c_eta >= 0.0)) throw ConfigInvalid("cover: c_eta must be >= 0");
    if (eps1 < eps) throw ConfigInvalid("cover: eps1 must be >= eps");
    if (!(c_star >= 10.0)) throw ConfigInvalid("cover: c_star must be >= 10");
    if (!(s_star >= 1.0)) throw ConfigInvalid("cover: s_star must be >= 1");
    if (!(theta_w > 0.0) || !(theta_w < 0.25))
      throw ConfigInvalid("cover: theta_w must lie in (0, 1/4)");
    if (!(v_max >= 1.0)) throw ConfigInvalid("cover: v_max must be >= 1");
  }
};

// Frame of one lattice cell: center in chart coordinates, its graph point,
// the outward normal there, and the fixed tangent pair used for azimuths.
struct CellFrame {
  int chart = -1;
  long i = 0, j = 0;
  Vec2 center{0, 0};
  Vec3 world{0, 0, 0};
  Vec3 n{0, 0, 0};
  Vec3 x1hat{0, 0, 0};
  Vec3 x2hat{0, 0, 0};
};

class CoverSet {
 public:
  CoverSet(std::shared_ptr<const Domain> dom, const CoverParams& p)
      : dom_(std::move(dom)), p_(p), atlas_(&Atlas::get(dom_, p.delta)) {
    n_eps_ = long(std::ceil(p_.delta / p_.eps));
    l_eps_ = long(std::ceil(2.0 * kPi / p_.eps));
  }

  const Domain& domain() const { return *dom_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return dom_; }
  const Atlas& atlas() const { return *atlas_; }
  const CoverParams& params() const { return p_; }

  // Nominal per-axis lattice bound ceil(delta/eps) and sector count
  // ceil(2 pi / eps); per-chart lattices use the chart's own half-width.
  long n_eps() const { return n_eps_; }
  long l_eps() const { return l_eps_; }

  // Largest valid |i| for a chart: cell centers must lie inside the patch.
  long cell_index_max(int chart) const {
    double dm = atlas_->charts()[std::size_t(chart)].delta();
    long m = long(std::floor((dm - 1e-12 * dm) / p_.eps));
    return std::max<long>(m, 0);
  }

  CellFrame cell_frame(int chart, long i, long j) const {
    if (chart < 0 || std::size_t(chart) >= atlas_->charts().size())
      throw OutOfPatch("cover: chart index out of range");
    const BoundaryChart& ch = atlas_->charts()[std::size_t(chart)];
    long m = cell_index_max(chart);
    if (std::labs(i) > m || std::labs(j) > m)
      throw OutOfPatch("cover: lattice cell outside chart patch");
    CellFrame f;
    f.chart = chart;
    f.i = i;
    f.j = j;
    f.center = Vec2(p_.eps * double(i), p_.eps * double(j));
    f.world = ch.graph_point(f.center[0], f.center[1]);
    f.n = ch.normal(f.center[0], f.center[1]);
    tangent_frame(f.n, f.x1hat, f.x2hat);
    return f;
  }

 private:
  std::shared_ptr<const Domain> dom_;
  CoverParams p_;
  const Atlas* atlas_;
  long n_eps_ = 0, l_eps_ = 0;
};

inline CoverSet build_cover(std::shared_ptr<const Domain> dom, const CoverParams& p) {
  p.validate();
  if (p.eps1 > p.delta / 4.0)
    throw EpsTooLarge("cover: eps1 exceeds delta/4, lattice rectangles degenerate");
  return CoverSet(std::move(dom), p);
}

namespace coverdetail {

// Admissible chord azimuths for v in one cell frame: the union of windows
// (eps*l - eps1', eps*l + eps1') over sector indices l in [0, L] whose center
// angle is within eps1' of v's azimuth. Consecutive admissible windows
// overlap (eps1' >= eps), so the union is a single circular arc.
struct SectorArc {
  double center = 0.0;
  double halfwidth = 0.0;  // <= pi; pi means every azimuth
};

inline double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

inline std::optional<SectorArc> sector_arc(const CoverSet& cov, const CellFrame& f,
                                           const Vec3& v, double eps1p) {
  const CoverParams& p = cov.params();
  double r = v.norm();
  if (r <= 0.0) return std::nullopt;
  double vn = v.dot(f.n);
  // Closed gate with a roundoff pad: exactly tangential velocities on flat
  // sheets (C_eta = 0) must pass even though the dot product is ~1e-16.
  double lim = 8.0 * p.c_eta * eps1p + 1e-12;
  bool polar_ok = (r <= 1.0 && std::abs(vn) <= lim) || (r >= 1.0 && std::abs(vn) / r <= lim);
  if (!polar_ok) return std::nullopt;

  double th_v = std::atan2(v.dot(f.x2hat), v.dot(f.x1hat));
  if (eps1p >= kPi) return SectorArc{th_v, kPi};

  const long L = cov.l_eps();
  double lo = kInf, hi = -kInf;
  // Candidate sector indices near th_v and near th_v + 2 pi (windows with l
  // close to L wrap past 2 pi and can match small azimuths).
  long span = long(std::ceil(eps1p / p.eps)) + 1;
  for (int pass = 0; pass < 2; ++pass) {
    double base = (th_v + (pass ? 2.0 * kPi : 0.0)) / p.eps;
    long l0 = long(std::llround(base));
    for (long l = l0 - span; l <= l0 + span; ++l) {
      if (l < 0 || l > L) continue;
      double off = wrap_pi(p.eps * double(l) - th_v);
      if (std::abs(off) < eps1p) {
        lo = std::min(lo, off);
        hi = std::max(hi, off);
      }
    }
  }
  if (lo > hi) return std::nullopt;
  double hw = 0.5 * (hi - lo) + eps1p;
  return SectorArc{th_v + 0.5 * (lo + hi), std::min(hw, kPi)};
}

// Point-to-tube distance for one cell. The (tau, s) minimization is closed
// form since d(theta) is orthogonal to n_c, and with the forward-exit cap
// ignored the theta minimization is closed form too: the free distance
//
//   D^2(z) = |w|^2 - b^2 + (b - s*)^2 - max(a_max, 0)^2,
//   w = x - launch(z),  b = w . n_c,  s* = clamp(b, -eps, eps),
//   a_max = max over admissible theta of w . d(theta),
//
// so phase A searches only the launch rectangle. Ignoring the cap gives a
// superset of the tube, making a phase-A reject final; accepts are certified
// in phase B by tracing the chord at the minimizer and, if the cap bites,
// re-minimizing with capped tau over (z, theta).
class TubeDistance {
 public:
  TubeDistance(const CoverSet& cov, const BoundaryChart& ch, const CellFrame& f,
               const Vec3& x, const SectorArc& arc, double eps1p)
      : cov_(cov), ch_(ch), f_(f), x_(x), arc_(arc), eps1p_(eps1p) {
    double dm = ch.delta();
    for (int k = 0; k < 2; ++k) {
      lo_[k] = std::max(f.center[k] - eps1p, -dm + 1e-12 * dm);
      hi_[k] = std::min(f.center[k] + eps1p, dm - 1e-12 * dm);
    }
  }

  // Minimum of the uncapped distance (grid + pattern search over z only).
  double minimize_free(double* z1o, double* z2o) {
    double bz1 = f_.center[0], bz2 = f_.center[1];
    double best = kInf;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double z1 = lerp(lo_[0], hi_[0], a / 3.0);
        double z2 = lerp(lo_[1], hi_[1], b / 3.0);
        double d = free_dist(z1, z2);
        if (d < best) { best = d; bz1 = z1; bz2 = z2; }
      }
    double step = 0.25 * std::max(hi_[0] - lo_[0], hi_[1] - lo_[1]);
    const double tol = eps1p_ / 200.0;
    for (int it = 0; it < 60 && step > tol; ++it) {
      double cz1 = bz1, cz2 = bz2, cb = best;
      auto probe = [&](double a, double b) {
        a = std::clamp(a, lo_[0], hi_[0]);
        b = std::clamp(b, lo_[1], hi_[1]);
        double d = free_dist(a, b);
        if (d < cb) { cb = d; cz1 = a; cz2 = b; }
      };
      probe(bz1 + step, bz2);
      probe(bz1 - step, bz2);
      probe(bz1, bz2 + step);
      probe(bz1, bz2 - step);
      if (cb < best) { best = cb; bz1 = cz1; bz2 = cz2; } else step *= 0.5;
    }
    *z1o = bz1;
    *z2o = bz2;
    return best;
  }

  // Distance with the forward-exit cap at the free minimizer's best theta.
  double capped_at(double z1, double z2) {
    double th = best_theta(z1, z2);
    return capped_dist(z1, z2, th);
  }

  // Capped minimum over (z, theta), seeded at the free minimizer.
  double minimize_capped(double z1, double z2) {
    double th = best_theta(z1, z2);
    double best = capped_dist(z1, z2, th);
    double step_z = 0.25 * std::max(hi_[0] - lo_[0], hi_[1] - lo_[1]);
    double step_t = 0.5 * std::max(arc_.halfwidth, 1e-3);
    const double tol = eps1p_ / 200.0;
    for (int it = 0; it < 40 && (step_z > tol || step_t > 2e-3); ++it) {
      double cz1 = z1, cz2 = z2, cth = th, cb = best;
      auto probe = [&](double a, double b, double t) {
        a = std::clamp(a, lo_[0], hi_[0]);
        b = std::clamp(b, lo_[1], hi_[1]);
        t = arc_.center + std::clamp(wrap_pi(t - arc_.center), -arc_.halfwidth,
                                     arc_.halfwidth);
        double d = capped_dist(a, b, t);
        if (d < cb) { cb = d; cz1 = a; cz2 = b; cth = t; }
      };
      probe(z1 + step_z, z2, th);
      probe(z1 - step_z, z2, th);
      probe(z1, z2 + step_z, th);
      probe(z1, z2 - step_z, th);
      probe(z1, z2, th + step_t);
      probe(z1, z2, th - step_t);
      if (cb < best) {
        best = cb; z1 = cz1; z2 = cz2; th = cth;
      } else {
        step_z *= 0.5;
        step_t *= 0.5;
      }
    }
    return best;
  }

 private:
  static double lerp(double a, double b, double t) { return a + (b - a) * t; }

  // Height solve warm-started from the previous evaluation; pattern-search
  // moves are small so one or two Newton steps usually suffice.
  Vec3 launch_point(double z1, double z2) {
    const Domain& dom = cov_.domain();
    const double tol_f = 1e-13 * dom.grad_bound() * dom.diameter();
    double h = h_warm_;
    bool ok = false;
    for (int it = 0; it < 8; ++it) {
      Vec3 p = ch_.embed(z1, z2, h);
      double fv = dom.F(p);
      if (std::abs(fv) < tol_f) { ok = true; break; }
      double df = dom.gradF(p).dot(ch_.inward());
      if (std::abs(df) < 1e-14) break;
      h -= fv / df;
      if (std::abs(h) > 0.6 * ch_.delta()) break;
    }
    if (!ok) h = ch_.eta(z1, z2);
    h_warm_ = h;
    return ch_.embed(z1, z2, h);
  }

  // Largest w . d(theta) over the admissible arc: |w_par| times the cosine
  // of the angular gap between w's azimuth and the arc.
  double best_a(const Vec3& w, double b, double* th_out) const {
    Vec3 wp = w - b * f_.n;
    double nw = wp.norm();
    double phi = nw > 0.0 ? std::atan2(wp.dot(f_.x2hat), wp.dot(f_.x1hat)) : arc_.center;
    double off = wrap_pi(phi - arc_.center);
    double gap = std::max(0.0, std::abs(off) - arc_.halfwidth);
    if (th_out)
      *th_out = arc_.center + std::clamp(off, -arc_.halfwidth, arc_.halfwidth);
    return nw * std::cos(std::min(gap, kPi));
  }

  double free_dist(double z1, double z2) {
    Vec3 w = cov_.domain().min_image(x_, launch_point(z1, z2));
    double b = w.dot(f_.n);
    double s = std::clamp(b, -cov_.params().eps, cov_.params().eps);
    double a = std::max(best_a(w, b, nullptr), 0.0);
    double d2 = w.squaredNorm() - b * b + sq(b - s) - a * a;
    return std::sqrt(d2 > 0.0 ? d2 : 0.0);
  }

  double best_theta(double z1, double z2) {
    Vec3 w = cov_.domain().min_image(x_, launch_point(z1, z2));
    double th = arc_.center;
    best_a(w, w.dot(f_.n), &th);
    return th;
  }

  double capped_dist(double z1, double z2, double th) {
    Vec3 w = cov_.domain().min_image(x_, launch_point(z1, z2));
    Vec3 d = std::cos(th) * f_.x1hat + std::sin(th) * f_.x2hat;
    double a = w.dot(d);
    double b = w.dot(f_.n);
    double tau = std::clamp(a, 0.0, horizon(z1, z2, th));
    double s = std::clamp(b, -cov_.params().eps, cov_.params().eps);
    double d2 = w.squaredNorm() - a * a - b * b + sq(a - tau) + sq(b - s);
    return std::sqrt(d2 > 0.0 ? d2 : 0.0);
  }

  // Forward exit length of the chord launched at (z1, z2) along d(theta),
  // cached on a quantized key; tracing failures shrink the tube (tau cap 0),
  // which can only under-accept, never over-accept.
  double horizon(double z1, double z2, double th) {
    double qz = eps1p_ / 256.0, qt = 2e-3;
    auto key = std::tuple<long, long, long>(std::lround(z1 / qz), std::lround(z2 / qz),
                                            std::lround(th / qt));
    auto it = tf_cache_.find(key);
    if (it != tf_cache_.end()) return it->second;
    Vec3 launch = launch_point(z1, z2);
    Vec3 d = std::cos(th) * f_.x1hat + std::sin(th) * f_.x2hat;
    double tf = 0.0;
    try {
      ExitRecord rec = exit_along(cov_.domain(), launch, d);
      tf = rec.never_exits ? kInf : rec.arclength;
    } catch (const KinlabError&) {
      tf = 0.0;
    }
    if (tf_cache_.size() < 256) tf_cache_.emplace(key, tf);
    return tf;
  }

  const CoverSet& cov_;
  const BoundaryChart& ch_;
  const CellFrame& f_;
  Vec3 x_;
  SectorArc arc_;
  double eps1p_;
  double lo_[2] = {0, 0}, hi_[2] = {0, 0};
  double h_warm_ = 0.0;
  std::map<std::tuple<long, long, long>, double> tf_cache_;
};

// Exact membership of (x, v) in the tubes of one cell.
inline bool member_cell(const CoverSet& cov, int chart, long i, long j,
                        const Vec3& x, const Vec3& v, double eps1p) {
  long m = cov.cell_index_max(chart);
  if (std::labs(i) > m || std::labs(j) > m) return false;
  CellFrame f = cov.cell_frame(chart, i, j);
  auto arc = sector_arc(cov, f, v, eps1p);
  if (!arc) return false;
  const BoundaryChart& ch = cov.atlas().charts()[std::size_t(chart)];
  TubeDistance td(cov, ch, f, x, *arc, eps1p);
  double z1, z2;
  if (td.minimize_free(&z1, &z2) >= eps1p) return false;
  if (td.capped_at(z1, z2) < eps1p) return true;
  return td.minimize_capped(z1, z2) < eps1p;
}

// Scans the block of cells around chart coordinates (z1, z2), nearest first.
// A stride > 1 walks every stride-th cell: rectangles have half-width eps1'
// >= stride * eps, so strided centers still cover every launch in range.
inline bool member_cells_near(const CoverSet& cov, int chart, double z1, double z2,
                              const Vec3& x, const Vec3& v, double eps1p, long halo,
                              long stride = 1) {
  long m = cov.cell_index_max(chart);
  double eps = cov.params().eps;
  long i0 = std::clamp(long(std::llround(z1 / eps)), -m, m);
  long j0 = std::clamp(long(std::llround(z2 / eps)), -m, m);
  for (long ring = 0; ring <= halo; ++ring)
    for (long di = -ring; di <= ring; ++di)
      for (long dj = -ring; dj <= ring; ++dj) {
        if (std::max(std::labs(di), std::labs(dj)) != ring) continue;
        long i = std::clamp(i0 + di * stride, -m, m);
        long j = std::clamp(j0 + dj * stride, -m, m);
        if (member_cell(cov, chart, i, j, x, v, eps1p)) return true;
      }
  return false;
}

// Near-tangency feet along the ray x + tau u: local maxima of F above
// -f_reach are closest approaches to the boundary; each is refined by a
// parabola fit and projected onto the boundary. Recording starts once the
// ray has dipped clearly below the detection band so a start near the
// boundary is not itself reported.
inline void graze_feet(const Domain& dom, const Vec3& x, const Vec3& u,
                       double f_reach, double f_enable, std::vector<Vec3>& out,
                       std::size_t cap) {
  const double diam = dom.diameter();
  const double g = dom.grad_bound();
  const double step_max = diam / 48.0;
  const double step_min = std::max(0.25 * f_reach / g, 1e-5 * diam);

  double t0 = 0.0, t1 = 0.0, t2 = 0.0;
  double f0 = 0.0, f1 = 0.0, f2 = dom.F(x);
  bool armed = f2 < f_enable;
  int have = 1;
  double tau = 0.0;
  for (int it = 0; it < 4000 && tau < 1.05 * diam; ++it) {
    double step = std::clamp(std::abs(f2) / (2.0 * g), step_min, step_max);
    tau += step;
    double f = dom.F(x + tau * u);
    t0 = t1; f0 = f1;
    t1 = t2; f1 = f2;
    t2 = tau; f2 = f;
    if (have < 3) { ++have; continue; }
    if (f2 >= 0.0) {
      // Crossed the boundary: the approach itself is the exit, not a graze.
      break;
    }
    if (!armed) {
      if (f2 < f_enable) armed = true;
      continue;
    }
    if (f1 >= f0 && f1 >= f2 && f1 >= -f_reach) {
      // Parabola vertex through the three samples around the local max.
      double h0 = t1 - t0, h1 = t2 - t1;
      double num = h0 * h0 * (f1 - f2) - h1 * h1 * (f1 - f0);
      double den = h0 * (f1 - f2) + h1 * (f1 - f0);
      double tv = t1;
      if (den > 1e-300) tv = std::clamp(t1 - 0.5 * num / den, t0, t2);
      auto foot = chartdetail::project_to_boundary(dom, x + tv * u,
                                                   1e-12 * g * diam);
      if (foot) {
        bool fresh = true;
        for (const Vec3& y : out)
          if (dom.min_image(y, *foot).norm() < 0.25 * f_reach / g) fresh = false;
        if (fresh) {
          out.push_back(*foot);
          if (out.size() >= cap) return;
        }
      }
      armed = false;  // require a fresh dip before the next foot
    }
  }
}

// Net over the boundary regions whose tangent planes dive into the domain.
// A chord carries tube points to depth d only where the boundary drops at
// least d below the launch plane, so every foot of a deep-reaching chord
// lies on such a region; convex and flat sheets only feed the collar. The
// net is geometry-only (independent of eps), built once per atlas.
struct SilhouetteNet {
  std::vector<Vec3> y;                        // net point on the boundary
  std::vector<Vec3> n;                        // outward normal there
  std::vector<std::pair<int, int>> edges;     // index pairs within 2.5 h
  double h = 0.0;                             // net spacing
};

inline std::shared_ptr<const SilhouetteNet> silhouette_net(const CoverSet& cov) {
  static std::mutex mu;
  static std::map<const Atlas*, std::shared_ptr<const SilhouetteNet>> registry;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = registry.find(&cov.atlas());
    if (it != registry.end()) return it->second;
  }

  const Domain& dom = cov.domain();
  const double diam = dom.diameter();
  const double step = std::max(diam / 96.0, 1e-3);
  const double stop_lvl = 1e-4 * dom.grad_bound() * diam;
  auto net = std::make_shared<SilhouetteNet>();
  net->h = std::max(diam / 120.0, 1e-3);

  std::map<std::tuple<long, long, long>, std::vector<int>> bins;
  auto bin_of = [&](const Vec3& q) {
    return std::tuple<long, long, long>(long(std::floor(q.x() / net->h)),
                                        long(std::floor(q.y() / net->h)),
                                        long(std::floor(q.z() / net->h)));
  };

  for (const BoundaryChart& ch : cov.atlas().charts()) {
    Vec3 yc = ch.origin();
    Vec3 no = ch.normal(0.0, 0.0);
    Vec3 t1, t2;
    tangent_frame(no, t1, t2);
    double maxdepth = 0.0;
    for (int k = 0; k < 8 && maxdepth <= 1e-3; ++k) {
      double a = 0.25 * kPi * double(k);
      Vec3 u = std::cos(a) * t1 + std::sin(a) * t2;
      for (double tau = step; tau < 1.05 * diam; tau += step) {
        double f = dom.F(yc + tau * u);
        if (f > stop_lvl) break;
        maxdepth = std::max(maxdepth, -f);
        if (maxdepth > 1e-3) break;
      }
    }
    if (maxdepth <= 1e-3) continue;

    auto [bx, by, bz] = bin_of(yc);
    bool blocked = false;
    for (long dx = -1; dx <= 1 && !blocked; ++dx)
      for (long dy = -1; dy <= 1 && !blocked; ++dy)
        for (long dz = -1; dz <= 1 && !blocked; ++dz) {
          auto it = bins.find(std::tuple<long, long, long>(bx + dx, by + dy, bz + dz));
          if (it == bins.end()) continue;
          for (int idx : it->second)
            if ((net->y[std::size_t(idx)] - yc).norm() < net->h) { blocked = true; break; }
        }
    if (blocked) continue;
    int id = int(net->y.size());
    net->y.push_back(yc);
    net->n.push_back(no);
    bins[bin_of(yc)].push_back(id);
  }

  const double reach = 2.5 * net->h;
  for (int i = 0; i < int(net->y.size()); ++i) {
    auto [bx, by, bz] = bin_of(net->y[std::size_t(i)]);
    long r = long(std::ceil(reach / net->h));
    for (long dx = -r; dx <= r; ++dx)
      for (long dy = -r; dy <= r; ++dy)
        for (long dz = -r; dz <= r; ++dz) {
          auto it = bins.find(std::tuple<long, long, long>(bx + dx, by + dy, bz + dz));
          if (it == bins.end()) continue;
          for (int j : it->second)
            if (j > i && (net->y[std::size_t(j)] - net->y[std::size_t(i)]).norm() < reach)
              net->edges.emplace_back(i, j);
        }
  }

  std::lock_guard<std::mutex> lk(mu);
  auto [it, inserted] = registry.emplace(&cov.atlas(), net);
  return it->second;
}

// Boundary-constrained evaluation of the tangency residual c(p) = (x-p).n(p):
// zero exactly when x lies on the tangent plane at p. Projection failures
// report +inf so pattern searches treat them as uphill.
inline double tangency_residual(const Domain& dom, const Vec3& x, const Vec3& p0,
                                const Vec3& off, Vec3* p_out) {
  auto pb = chartdetail::project_to_boundary(dom, p0 + off,
                                             1e-12 * dom.grad_bound() * dom.diameter());
  if (!pb) return kInf;
  if (p_out) *p_out = *pb;
  return dom.min_image(x, *pb).dot(dom.outward_normal(*pb));
}

// Walks the silhouette of x (the c = 0 level set on the boundary) from a seed
// toward an azimuth match with v, then runs exact cell tests around the foot.
// Returns true on a certified tube membership; test_budget bounds the total
// number of exact cell minimizations across all seeds of one query.
inline bool silhouette_probe(const CoverSet& cov, const Vec3& x, const Vec3& v,
                             double eps1p, Vec3 seed, double h_net, int& test_budget) {
  const Domain& dom = cov.domain();
  const CoverParams& par = cov.params();
  const double az_tol = 1.5 * eps1p;
  const double c_keep = par.eps + 2.0 * eps1p + 0.05;

  auto mism_at = [&](const Vec3& p) {
    Vec3 no = dom.outward_normal(p);
    Vec3 t1, t2;
    tangent_frame(no, t1, t2);
    Vec3 w = dom.min_image(x, p);
    Vec3 wp = w - w.dot(no) * no;
    if (wp.norm() < 1e-9) return kPi;  // x straight above p: no chord azimuth
    double thw = std::atan2(wp.dot(t2), wp.dot(t1));
    double thv = std::atan2(v.dot(t2), v.dot(t1));
    return wrap_pi(thv - thw);
  };

  auto test_cells = [&](const Vec3& foot) {
    std::vector<int> cands = cov.atlas().charts_near(foot);
    int own = cov.atlas().owner_chart(foot);
    if (own >= 0 && std::find(cands.begin(), cands.end(), own) == cands.end())
      cands.push_back(own);
    long stride = std::max<long>(1, long(std::floor(eps1p / par.eps)));
    for (int ci : cands) {
      if (test_budget <= 0) return false;
      test_budget -= 9;
      const BoundaryChart& ch = cov.atlas().charts()[std::size_t(ci)];
      Vec3 z = ch.coords(foot);
      if (member_cells_near(cov, ci, z[0], z[1], x, v, eps1p, 1, stride)) return true;
    }
    return false;
  };

  // Refine the seed onto the level set: pattern search on |c| in the local
  // tangent frame, reprojecting to the boundary at every probe.
  Vec3 p = seed;
  double c = tangency_residual(dom, x, seed, Vec3::Zero(), &p);
  if (!std::isfinite(c)) return false;
  const double h_min = std::max(0.002, 0.05 * eps1p);
  for (double h = 0.4 * h_net; h > h_min; h *= 0.5) {
    for (int it = 0; it < 6; ++it) {
      Vec3 no = dom.outward_normal(p);
      Vec3 t1, t2;
      tangent_frame(no, t1, t2);
      double bc = c;
      Vec3 bpt = p;
      for (const Vec3& off : {Vec3(h * t1), Vec3(-h * t1), Vec3(h * t2), Vec3(-h * t2)}) {
        Vec3 q;
        double cq = tangency_residual(dom, x, p, off, &q);
        if (std::abs(cq) < std::abs(bc)) { bc = cq; bpt = q; }
      }
      if (std::abs(bc) >= std::abs(c)) break;
      c = bc;
      p = bpt;
    }
    if (std::abs(c) < 0.25 * c_keep) break;
  }
  if (std::abs(c) > c_keep) return false;

  // Azimuth walk along the level set; steps keep |c| corrected by probing.
  double mism = mism_at(p);
  if (std::abs(mism) <= az_tol && test_cells(p)) return true;
  double walk_step = std::max(2.0 * par.eps, 0.25 * eps1p);
  walk_step = std::min(walk_step, 0.05 * dom.diameter());
  for (int dir = -1; dir <= 1; dir += 2) {
    Vec3 q = p;
    double mq = mism;
    double prev = std::abs(mq);
    for (int it = 0; it < 60 && test_budget > 0; ++it) {
      Vec3 no = dom.outward_normal(q);
      Vec3 t1, t2;
      tangent_frame(no, t1, t2);
      // Level-set tangent from finite differences of c.
      double h = 0.5 * walk_step;
      double c1 = tangency_residual(dom, x, q, h * t1, nullptr) -
                  tangency_residual(dom, x, q, -h * t1, nullptr);
      double c2 = tangency_residual(dom, x, q, h * t2, nullptr) -
                  tangency_residual(dom, x, q, -h * t2, nullptr);
      Vec3 tan = -c2 * t1 + c1 * t2;
      if (!std::isfinite(c1) || !std::isfinite(c2) || tan.norm() < 1e-14) break;
      tan.normalize();
      Vec3 qn;
      double cq = tangency_residual(dom, x, q, double(dir) * walk_step * tan, &qn);
      if (!std::isfinite(cq)) break;
      // One corrector step back toward the level set along grad c.
      if (std::abs(cq) > c_keep) {
        Vec3 gdir = (c1 * t1 + c2 * t2).normalized();
        double scale = -cq * walk_step / std::max(std::hypot(c1, c2), 1e-14);
        Vec3 qc;
        double cc = tangency_residual(dom, x, qn, scale * gdir, &qc);
        if (std::isfinite(cc) && std::abs(cc) < std::abs(cq)) { qn = qc; cq = cc; }
        if (std::abs(cq) > c_keep + 0.05) break;
      }
      q = qn;
      mq = mism_at(q);
      if (std::abs(mq) <= az_tol) {
        if (test_cells(q)) return true;
        if (std::abs(mq) < 0.25 * az_tol) break;  // matched and tested: done this side
      } else if (std::abs(mq) > prev + 0.3) {
        break;  // walking away from the match
      }
      prev = std::abs(mq);
    }
  }
  return false;
}

}  // namespace coverdetail

// Exact membership of (x, v) in the cover, with all half-widths scaled by
// `inflate` except the lattice spacing and the normal thickness eps (the
// inflated object is the nesting target O_{eps, inflate * eps1} on the same
// lattice). Deterministic; no randomness is consumed.
inline bool cover_contains(const CoverSet& cov, const PhasePoint& p, double inflate = 1.0) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  const double eps1p = inflate * par.eps1;
  const double speed = p.v.norm();
  if (speed < eps1p) return true;

  const double g = dom.grad_bound();
  const double fx = dom.F(p.x);
  const double band = 2.0 * g * (par.eps + eps1p);

  // Collar: the tau ~ 0 slice of every tube lies within eps + eps1' of the
  // boundary sheet, so test cells around the boundary projection of x.
  if (std::abs(fx) <= band) {
    auto pb = chartdetail::project_to_boundary(dom, p.x, 1e-12 * g * dom.diameter());
    if (pb) {
      std::vector<int> cands = cov.atlas().charts_near(*pb);
      int own = cov.atlas().owner_chart(*pb);
      if (own >= 0 && std::find(cands.begin(), cands.end(), own) == cands.end())
        cands.push_back(own);
      for (int ci : cands) {
        const BoundaryChart& ch = cov.atlas().charts()[std::size_t(ci)];
        Vec3 z = ch.coords(*pb);
        if (coverdetail::member_cells_near(cov, ci, z[0], z[1], p.x, p.v, eps1p, 1))
          return true;
      }
    }
  }
  if (fx >= 0.0) return false;  // outside: chords are interior, collar decided

  // Fast chord path: when v is nearly parallel to the chord carrying x (the
  // common case for near-grazing data), marching along -+v^ sees the chord's
  // tangency feet directly. Reach stays at the uninflated scale: aligned
  // chords pass within eps1 of x by construction.
  const double f_reach = g * (par.eps + 2.0 * par.eps1);
  const double f_enable = -0.75 * band;
  const long stride = std::max<long>(1, long(std::floor(eps1p / par.eps)));
  Vec3 vhat = p.v / speed;

  std::vector<Vec3> feet;
  coverdetail::graze_feet(dom, p.x, -vhat, f_reach, f_enable, feet, 8);
  coverdetail::graze_feet(dom, p.x, vhat, f_reach, f_enable, feet, 8);
  for (const Vec3& foot : feet) {
    std::vector<int> cands = cov.atlas().charts_near(foot);
    int own = cov.atlas().owner_chart(foot);
    if (own >= 0 && std::find(cands.begin(), cands.end(), own) == cands.end())
      cands.push_back(own);
    for (int ci : cands) {
      const BoundaryChart& ch = cov.atlas().charts()[std::size_t(ci)];
      Vec3 zf = ch.coords(foot);
      if (coverdetail::member_cells_near(cov, ci, zf[0], zf[1], p.x, p.v, eps1p, 2, stride))
        return true;
    }
  }

  // Silhouette tier: feet of deep-reaching chords lie where the boundary
  // drops below its own tangent plane, so seed from the sign structure of
  // the tangency residual c = (x - y).n(y) over the capable net and walk
  // each seed along the c = 0 level set to an azimuth match with v.
  auto net = coverdetail::silhouette_net(cov);
  if (net->y.empty()) return false;
  const double c_span = par.eps + 2.0 * eps1p + 0.05;
  std::vector<double> cvals(net->y.size());
  for (std::size_t k = 0; k < net->y.size(); ++k)
    cvals[k] = dom.min_image(p.x, net->y[k]).dot(net->n[k]);

  std::vector<std::pair<double, Vec3>> seeds;
  for (auto [i, j] : net->edges) {
    double ci = cvals[std::size_t(i)], cj = cvals[std::size_t(j)];
    if (std::min(ci, cj) <= c_span && std::max(ci, cj) >= -c_span)
      seeds.emplace_back(std::min(std::abs(ci), std::abs(cj)),
                         0.5 * (net->y[std::size_t(i)] + net->y[std::size_t(j)]));
  }
  if (seeds.empty()) return false;
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<Vec3> kept;
  int test_budget = 96;
  for (const auto& [rank, s] : seeds) {
    bool close = false;
    for (const Vec3& k : kept)
      if ((k - s).norm() < 1.2 * net->h) { close = true; break; }
    if (close) continue;
    kept.push_back(s);
    if (coverdetail::silhouette_probe(cov, p.x, p.v, eps1p, s, net->h, test_budget))
      return true;
    if (kept.size() >= 16 || test_budget <= 0) break;
  }
  return false;
}

struct InclusionReport {
  std::int64_t n = 0;
  std::int64_t members = 0;
  double fraction = 0.0;
};

inline InclusionReport check_inclusion(const CoverSet& cov,
                                       const std::vector<PhasePoint>& samples,
                                       double inflate = 1.0, int threads = 1) {
  struct Acc {
    std::int64_t hit = 0;
    void merge(const Acc& o) { hit += o.hit; }
  };
  const auto n = std::int64_t(samples.size());
  Acc acc = parallel_accumulate<Acc>(n, threads, [&](std::int64_t i, Acc& a) {
    if (cover_contains(cov, samples[std::size_t(i)], inflate)) ++a.hit;
  });
  InclusionReport rep;
  rep.n = n;
  rep.members = acc.hit;
  rep.fraction = n ? double(acc.hit) / double(n) : 0.0;
  return rep;
}

// Points near the membership boundary of the base cover must lie inside the
// c_star-inflated cover. Pairs (member, non-member) are bisected in phase
// space to within eps1/10 and the member-side endpoint is tested inflated.
struct NestingReport {
  std::int64_t attempted = 0;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
};

inline NestingReport check_nesting(const CoverSet& cov, std::int64_t n, std::uint64_t seed) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  RngStream rng(seed, "cover-nesting");
  NestingReport rep;
  for (std::int64_t i = 0; i < n; ++i) {
    ++rep.attempted;
    BoundarySample bs = dom.boundary_sample(rng, std::uint64_t(i));
    Vec3 nrm = dom.outward_normal(bs.x);
    Vec3 t1, t2;
    tangent_frame(nrm, t1, t2);
    double th = rng.uniform(std::uint64_t(i), 60, 0.0, 2.0 * kPi);
    double rv = rng.uniform(std::uint64_t(i), 61, 2.0 * par.eps1, par.v_max);
    double mu = rng.uniform(std::uint64_t(i), 62, -4.0 * par.c_eta * par.eps1,
                            4.0 * par.c_eta * par.eps1);
    Vec3 dir = (std::cos(th) * t1 + std::sin(th) * t2 + mu * nrm).normalized();
    Vec3 v_in = rv * dir;
    double off = rng.uniform(std::uint64_t(i), 63, 0.0, par.eps + par.eps1);
    PhasePoint p_in{bs.x - off * nrm, v_in};

    if (!cover_contains(cov, p_in, 1.0)) continue;
    // Steep companion velocity: almost never a cover member.
    PhasePoint p_out{p_in.x, rv * (-nrm + 0.05 * t1).normalized()};
    if (cover_contains(cov, p_out, 1.0)) continue;

    double lo = 0.0, hi = 1.0;  // p(lo) member, p(hi) not
    PhasePoint q = p_in;
    for (int it = 0; it < 40; ++it) {
      double gap = (hi - lo) * ((p_out.x - p_in.x).norm() + (p_out.v - p_in.v).norm());
      if (gap <= par.eps1 / 10.0) break;
      double mid = 0.5 * (lo + hi);
      PhasePoint pm{p_in.x + mid * (p_out.x - p_in.x), p_in.v + mid * (p_out.v - p_in.v)};
      if (cover_contains(cov, pm, 1.0)) {
        lo = mid;
        q = pm;
      } else {
        hi = mid;
      }
    }
    ++rep.checked;
    if (!cover_contains(cov, q, par.c_star)) ++rep.violations;
  }
  return rep;
}

struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
  double hit_fraction = 0.0;
};

// Monte Carlo estimate of the bulk measure of the inflated cover,
//   integral over Omega x R^3 of 1_{O(eps, c_star eps1)} e^{-theta |v|^2},
// with x uniform on the bounding box (zero weight outside Omega) and v drawn
// from the Gaussian e^{-theta |v|^2} itself, so there is no velocity
// truncation error.
inline MeasureEstimate estimate_cover_measure(const CoverSet& cov, std::int64_t n,
                                              std::uint64_t seed, int threads = 1) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  const auto [blo, bhi] = dom.box();
  const double vol_box =
      (bhi[0] - blo[0]) * (bhi[1] - blo[1]) * (bhi[2] - blo[2]);
  const double zv = std::pow(kPi / par.theta_w, 1.5);
  RngStream rng(seed, "cover-bulk");

  struct Acc {
    MeanAcc m;
    std::int64_t hits = 0;
    void merge(const Acc& o) { m.merge(o.m); hits += o.hits; }
  };
  Acc acc = parallel_accumulate<Acc>(n, threads, [&](std::int64_t i, Acc& a) {
    auto u = std::uint64_t(i);
    Vec3 x(rng.uniform(u, 60, blo[0], bhi[0]), rng.uniform(u, 61, blo[1], bhi[1]),
           rng.uniform(u, 62, blo[2], bhi[2]));
    if (!dom.inside(x)) {
      a.m.add(0.0);
      return;
    }
    Vec3 v = rng.normal3(u, 63) / std::sqrt(2.0 * par.theta_w);
    bool hit = cover_contains(cov, {x, v}, par.c_star);
    if (hit) ++a.hits;
    a.m.add(hit ? vol_box * zv : 0.0);
  });
  MeasureEstimate est;
  est.value = acc.m.mean();
  est.std_error = acc.m.std_error();
  est.n = n;
  est.hit_fraction = n ? double(acc.hits) / double(n) : 0.0;
  return est;
}

// Monte Carlo estimate of the incoming boundary measure of the inflated
// cover,
//   integral over gamma_- of 1_{O(eps, c_star eps1)} |n . v| e^{-theta |v|^2},
// sampled with surface weights and a half/half mixture of the plain Gaussian
// and a proposal concentrated in the near-tangent band |n . v^| < mu_cap
// where the velocity sectors live. The mixture keeps the estimator unbiased
// while feeding most samples into the band that carries the measure.
inline MeasureEstimate estimate_boundary_measure(const CoverSet& cov, std::int64_t n,
                                                 std::uint64_t seed, int threads = 1) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  const double th_w = par.theta_w;
  const double mu_cap = std::min(1.0, 16.0 * par.c_eta * par.c_star * par.eps1);
  const double g3 = std::pow(th_w / kPi, 1.5);  // Gaussian density prefactor
  RngStream rng(seed, "cover-boundary");

  struct Acc {
    MeanAcc m;
    std::int64_t hits = 0;
    void merge(const Acc& o) { m.merge(o.m); hits += o.hits; }
  };
  Acc acc = parallel_accumulate<Acc>(n, threads, [&](std::int64_t i, Acc& a) {
    auto u = std::uint64_t(i);
    BoundarySample bs = dom.boundary_sample(rng, u);
    Vec3 nrm = dom.outward_normal(bs.x);
    Vec3 t1, t2;
    tangent_frame(nrm, t1, t2);

    Vec3 v;
    if (rng.uniform(u, 70) < 0.5) {
      v = rng.normal3(u, 71) / std::sqrt(2.0 * th_w);
      if (v.dot(nrm) > 0.0) v = -v;  // symmetric: folds onto n.v < 0
    } else {
      double mu = -mu_cap * rng.uniform(u, 74);
      double phi = rng.uniform(u, 75, 0.0, 2.0 * kPi);
      double sin_th = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      Vec3 dir = sin_th * (std::cos(phi) * t1 + std::sin(phi) * t2) + mu * nrm;
      double r = rng.normal3(u, 76).norm() / std::sqrt(2.0 * th_w);
      v = r * dir;
    }
    double r = v.norm();
    double mu_v = r > 0.0 ? v.dot(nrm) / r : 0.0;
    if (mu_v >= 0.0 || r <= 0.0) {
      a.m.add(0.0);
      return;
    }
    // Densities of the two mixture halves at v (both supported on n.v < 0).
    double gauss = 2.0 * g3 * std::exp(-th_w * r * r);
    double band = 0.0;
    if (-mu_v < mu_cap)
      band = (2.0 / mu_cap) * g3 * std::exp(-th_w * r * r);
    double q = 0.5 * gauss + 0.5 * band;
    bool hit = cover_contains(cov, {bs.x, v}, par.c_star);
    if (hit) ++a.hits;
    double f = hit ? bs.weight * std::abs(v.dot(nrm)) * std::exp(-th_w * r * r) : 0.0;
    a.m.add(q > 0.0 ? f / q : 0.0);
  });
  MeasureEstimate est;
  est.value = acc.m.mean();
  est.std_error = acc.m.std_error();
  est.n = n;
  est.hit_fraction = n ? double(acc.hits) / double(n) : 0.0;
  return est;
}

// Minimum phase-space distance from points outside the inflated cover to the
// sampled grazing set: non-members should sit at least a fixed multiple of
// eps away from every grazing phase point.
struct DistanceReport {
  double min_dist = kInf;
  double min_over_eps = kInf;
  std::int64_t tested = 0;
};

inline DistanceReport check_distance(const CoverSet& cov,
                                     const std::vector<PhasePoint>& grazing,
                                     std::int64_t n, std::uint64_t seed) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  const auto [blo, bhi] = dom.box();
  RngStream rng(seed, "cover-distance");
  DistanceReport rep;
  for (std::int64_t i = 0; i < n; ++i) {
    auto u = std::uint64_t(i);
    Vec3 x(rng.uniform(u, 60, blo[0], bhi[0]), rng.uniform(u, 61, blo[1], bhi[1]),
           rng.uniform(u, 62, blo[2], bhi[2]));
    if (!dom.inside(x)) continue;
    Vec3 v = rng.ball_point(u, par.v_max, 63);
    PhasePoint q{x, v};
    if (cover_contains(cov, q, par.c_star)) continue;
    ++rep.tested;
    double d = dist_to_singular(dom, q, grazing);
    if (d < rep.min_dist) rep.min_dist = d;
  }
  rep.min_over_eps = rep.min_dist / par.eps;
  return rep;
}

// Cone-lemma audit. With C_* = c_star and the measured chart norms,
//   C2 = sqrt(8 C_*/3) (1 + |eta|_C2)^{1/2}
//   C3 = (4 C_* + 8 C_* (1 + |eta|_C1)^{1/2} + 2/C~) / C2
//   C4 = C3 (1 + |eta|_C2),
// every cover member on the incoming boundary with |v| >= eps^{1/3} must have
// |n0 . v^| <= C4 sqrt(eps), where n0 is the normal at the center of the
// chart owning x. Samples additionally satisfying the alignment hypothesis
// n0 . v^ <= -s_star C2 sqrt(eps) are counted separately: when that band is
// empty (desk-scale eps makes s_star C2 sqrt(eps) > 1) the hypothesis-gated
// form of the lemma holds vacuously and the report shows it.
struct ConeReport {
  std::int64_t sampled = 0;
  std::int64_t members = 0;
  std::int64_t eligible = 0;    // members with |v| >= eps^{1/3}
  std::int64_t qualifying = 0;  // eligible and alignment hypothesis holds
  std::int64_t violations = 0;  // eligible with |n0 . v^| > C4 sqrt(eps)
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double bound = 0.0;   // C4 sqrt(eps)
  double hyp_lo = 0.0;  // s_star C2 sqrt(eps)
};

inline ConeReport check_cone_bound(const CoverSet& cov, std::int64_t n,
                                   std::uint64_t seed, double c_tilde = 1000.0) {
  const CoverParams& par = cov.params();
  const Domain& dom = cov.domain();
  const Atlas& atlas = cov.atlas();
  // Chart norms: |eta|_C1 bounds the slope, |eta|_C2 adds the height and
  // second derivatives (height within a patch stays below delta/2).
  const double c1n = atlas.slope_max();
  const double c2n = 0.5 * par.delta + atlas.slope_max() + atlas.c_eta();
  ConeReport rep;
  rep.c2 = std::sqrt(8.0 * par.c_star / 3.0) * std::sqrt(1.0 + c2n);
  rep.c3 = (4.0 * par.c_star + 8.0 * par.c_star * std::sqrt(1.0 + c1n) + 2.0 / c_tilde) /
           rep.c2;
  rep.c4 = rep.c3 * (1.0 + c2n);
  rep.bound = rep.c4 * std::sqrt(par.eps);
  rep.hyp_lo = par.s_star * rep.c2 * std::sqrt(par.eps);

  RngStream rng(seed, "cover-cone");
  const double v_floor = std::cbrt(par.eps);
  for (std::int64_t i = 0; i < n; ++i) {
    auto u = std::uint64_t(i);
    BoundarySample bs = dom.boundary_sample(rng, u);
    Vec3 nrm = dom.outward_normal(bs.x);
    Vec3 v = rng.normal3(u, 80) / std::sqrt(2.0 * par.theta_w);
    if (v.dot(nrm) > 0.0) v = -v;
    ++rep.sampled;
    if (!cover_contains(cov, {bs.x, v}, par.c_star)) continue;
    ++rep.members;
    double r = v.norm();
    if (r < v_floor) continue;
    ++rep.eligible;
    int ci = atlas.owner_chart(bs.x);
    if (ci < 0) continue;
    const BoundaryChart& ch = atlas.charts()[std::size_t(ci)];
    double align = ch.normal(0.0, 0.0).dot(v) / r;
    if (align <= -rep.hyp_lo && align >= -1.0) ++rep.qualifying;
    if (std::abs(align) > rep.bound) ++rep.violations;
  }
  return rep;
}

}  // namespace kinlab
