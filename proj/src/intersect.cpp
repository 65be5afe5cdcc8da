#include "cubeval/intersect.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <thread>

#include <Eigen/Geometry>

#include "cubeval/sampling.hpp"

namespace cubeval {

double TriFace::area() const {
  return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
}

namespace {

// Face order: -x, +x, -y, +y, -z, +z. Quads are wound counterclockwise as
// seen from outside; corner ids follow the Cuboid::corners() bit layout.
constexpr int kFaceQuads[6][4] = {
    {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6},
};

struct Plane {
  Vec3 n;    // outward unit normal
  double d;  // n . x == d on the plane; inside means n . x <= d + eps
};

struct BoxGeom {
  std::array<Vec3, 8> corners;
  std::array<Plane, 6> planes;
  double volume;
  Vec3 aabb_lo, aabb_hi;

  explicit BoxGeom(const Cuboid& c) : corners(c.corners()), volume(c.volume()) {
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      const double sign = (f % 2 == 0) ? -1.0 : 1.0;
      const Vec3 n = sign * c.rotation().col(axis);
      planes[f] = {n, n.dot(c.center()) + 0.5 * c.dims()[axis]};
    }
    aabb_lo = corners[0];
    aabb_hi = corners[0];
    for (int k = 1; k < 8; ++k) {
      aabb_lo = aabb_lo.cwiseMin(corners[k]);
      aabb_hi = aabb_hi.cwiseMax(corners[k]);
    }
  }
};

bool aabb_disjoint(const BoxGeom& a, const BoxGeom& b) {
  for (int i = 0; i < 3; ++i)
    if (a.aabb_lo[i] > b.aabb_hi[i] || b.aabb_lo[i] > a.aabb_hi[i]) return true;
  return false;
}

// Sutherland-Hodgman step: clips a convex polygon against one half-space.
// Writes at most n + 1 vertices.
int clip_polygon(const Vec3* in, int n, const Plane& plane, Vec3* out) {
  int m = 0;
  for (int i = 0; i < n; ++i) {
    const Vec3& cur = in[i];
    const Vec3& nxt = in[(i + 1) % n];
    const double dc = plane.n.dot(cur) - plane.d;
    const double dn = plane.n.dot(nxt) - plane.d;
    const bool cur_in = dc <= kPlaneEps;
    const bool nxt_in = dn <= kPlaneEps;
    if (cur_in) out[m++] = cur;
    if (cur_in != nxt_in) out[m++] = cur + (dc / (dc - dn)) * (nxt - cur);
  }
  return m;
}

struct Fragment {
  Vec3 a, b, c;
  std::int8_t source;
};

// Each side contributes at most 12 triangles, each clipped by 6 planes into
// at most a 9-gon (one extra vertex per plane), i.e. <= 7 fan triangles:
// 2 * 12 * 7 = 168 total. Fixed capacity keeps the kernel heap-free.
struct FragmentBuffer {
  std::array<Fragment, 192> frags;
  int count = 0;

  void add(const Vec3& a, const Vec3& b, const Vec3& c, std::int8_t source) {
    if (0.5 * (b - a).cross(c - a).norm() <= kFaceAreaEps) return;
    assert(count < static_cast<int>(frags.size()));
    frags[count++] = {a, b, c, source};
  }
};

bool planes_coincide(const Plane& p, const Plane& q) {
  if ((p.n - q.n).norm() <= kCoplanarAngleEps && std::abs(p.d - q.d) <= kPlaneEps) return true;
  if ((p.n + q.n).norm() <= kCoplanarAngleEps && std::abs(p.d + q.d) <= kPlaneEps) return true;
  return false;
}

// Clips `subject`'s triangles against `clipper`'s half-spaces, appending the
// surviving fragments. `drop_coincident` implements the coplanar dedup: the
// second pass skips whole faces whose plane coincides with a clipper plane,
// so the box-1 fragment is the one kept.
void collect_side(const BoxGeom& subject, const BoxGeom& clipper, std::int8_t source,
                  bool drop_coincident, FragmentBuffer& out) {
  Vec3 buf_a[16], buf_b[16];
  for (int f = 0; f < 6; ++f) {
    if (drop_coincident) {
      bool dup = false;
      for (int g = 0; g < 6 && !dup; ++g) dup = planes_coincide(subject.planes[f], clipper.planes[g]);
      if (dup) continue;
    }
    const int* quad = kFaceQuads[f];
    const int tris[2][3] = {{quad[0], quad[1], quad[2]}, {quad[0], quad[2], quad[3]}};
    for (const auto& tri : tris) {
      buf_a[0] = subject.corners[tri[0]];
      buf_a[1] = subject.corners[tri[1]];
      buf_a[2] = subject.corners[tri[2]];
      int n = 3;
      Vec3* cur = buf_a;
      Vec3* nxt = buf_b;
      for (int g = 0; g < 6 && n >= 3; ++g) {
        n = clip_polygon(cur, n, clipper.planes[g], nxt);
        std::swap(cur, nxt);
      }
      for (int k = 1; k + 1 < n; ++k) out.add(cur[0], cur[k], cur[k + 1], source);
    }
  }
}

void collect_intersection(const BoxGeom& a, const BoxGeom& b, FragmentBuffer& out) {
  collect_side(a, b, 1, false, out);
  collect_side(b, a, 2, true, out);
}

// Signed tetrahedra against the fragment-vertex centroid; the shape is
// convex so the centroid is interior and the terms do not cancel. The
// absolute value is applied once, on the final sum.
double fragments_volume(const FragmentBuffer& buf) {
  if (buf.count == 0) return 0.0;
  Vec3 centroid = Vec3::Zero();
  for (int i = 0; i < buf.count; ++i) centroid += buf.frags[i].a + buf.frags[i].b + buf.frags[i].c;
  centroid /= 3.0 * buf.count;
  double six_vol = 0.0;
  for (int i = 0; i < buf.count; ++i) {
    const Fragment& f = buf.frags[i];
    six_vol += (f.a - centroid).dot((f.b - centroid).cross(f.c - centroid));
  }
  const double vol = std::abs(six_vol) / 6.0;
  return vol < kVolumeEps ? 0.0 : vol;
}

double pair_iou_exact(const BoxGeom& a, const BoxGeom& b) {
  FragmentBuffer buf;
  collect_intersection(a, b, buf);
  const double inter = fragments_volume(buf);
  if (inter <= 0.0) return 0.0;
  return std::clamp(inter / (a.volume + b.volume - inter), 0.0, 1.0);
}

// ------------------------------------------------------- top-view footprint

struct Footprint {
  std::array<Vec2, 8> hull;  // CCW
  int n = 0;
  double area = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
  double volume = 0.0;  // true box volume, as the legacy baselines use

  explicit Footprint(const Cuboid& c) : volume(c.volume()) {
    const auto corners = c.corners();
    std::array<Vec2, 8> pts;
    y_lo = y_hi = corners[0].y();
    for (int k = 0; k < 8; ++k) {
      pts[k] = {corners[k].x(), corners[k].z()};
      y_lo = std::min(y_lo, corners[k].y());
      y_hi = std::max(y_hi, corners[k].y());
    }
    n = convex_hull(pts, hull);
    area = polygon_area(hull.data(), n);
  }

  static double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  }

  static int convex_hull(std::array<Vec2, 8> pts, std::array<Vec2, 8>& out) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
      return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    const auto end = std::unique(pts.begin(), pts.end(),
                                 [](const Vec2& a, const Vec2& b) { return a == b; });
    const int m = static_cast<int>(end - pts.begin());
    if (m <= 2) {
      for (int i = 0; i < m; ++i) out[i] = pts[i];
      return m;
    }
    std::array<Vec2, 17> h;
    int k = 0;
    for (int i = 0; i < m; ++i) {  // lower chain
      while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
      h[k++] = pts[i];
    }
    const int lower = k + 1;
    for (int i = m - 2; i >= 0; --i) {  // upper chain
      while (k >= lower && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
      h[k++] = pts[i];
    }
    --k;  // last point equals the first
    for (int i = 0; i < k; ++i) out[i] = h[i];
    return k;
  }

  static double polygon_area(const Vec2* p, int n) {
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec2& a = p[i];
      const Vec2& b = p[(i + 1) % n];
      twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * std::abs(twice);
  }
};

// Clips CCW convex polygon `p` by every edge of CCW convex polygon `q`.
double convex_intersection_area(const Vec2* p, int np, const Vec2* q, int nq) {
  if (np < 3 || nq < 3) return 0.0;
  std::array<Vec2, 24> buf_a, buf_b;
  std::copy(p, p + np, buf_a.begin());
  int n = np;
  Vec2* cur = buf_a.data();
  Vec2* nxt = buf_b.data();
  for (int e = 0; e < nq && n >= 3; ++e) {
    const Vec2& e0 = q[e];
    const Vec2& e1 = q[(e + 1) % nq];
    const Vec2 dir = e1 - e0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
      const Vec2& a = cur[i];
      const Vec2& b = cur[(i + 1) % n];
      // CCW clipper: the interior is the left side of each directed edge.
      const double da = dir.x() * (a.y() - e0.y()) - dir.y() * (a.x() - e0.x());
      const double db = dir.x() * (b.y() - e0.y()) - dir.y() * (b.x() - e0.x());
      const bool a_in = da >= 0.0;
      const bool b_in = db >= 0.0;
      if (a_in) nxt[m++] = a;
      if (a_in != b_in) nxt[m++] = a + (da / (da - db)) * (b - a);
    }
    n = m;
    std::swap(cur, nxt);
  }
  return Footprint::polygon_area(cur, n);
}

double pair_iou_approx(const Footprint& a, const Footprint& b) {
  const double overlap_y = std::min(a.y_hi, b.y_hi) - std::max(a.y_lo, b.y_lo);
  if (overlap_y <= 0.0) return 0.0;
  const double inter_area = convex_intersection_area(a.hull.data(), a.n, b.hull.data(), b.n);
  const double inter = inter_area * overlap_y;
  if (inter <= 0.0) return 0.0;
  // The footprint over-counts off-plane boxes, so the apparent intersection
  // can exceed the true volumes; out-of-range ratios clamp to 1.
  const double uni = a.volume + b.volume - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 1.0;
}

}  // namespace

std::array<TriFace, 12> box_to_mesh(const Cuboid& c) {
  const auto corners = c.corners();
  std::array<TriFace, 12> out;
  for (int f = 0; f < 6; ++f) {
    const int* quad = kFaceQuads[f];
    out[2 * f] = {{corners[quad[0]], corners[quad[1]], corners[quad[2]]}, 0};
    out[2 * f + 1] = {{corners[quad[0]], corners[quad[2]], corners[quad[3]]}, 0};
  }
  return out;
}

IntersectionShape intersect_shape(const Cuboid& a, const Cuboid& b) {
  const BoxGeom ga(a), gb(b);
  FragmentBuffer buf;
  collect_intersection(ga, gb, buf);
  IntersectionShape shape;
  shape.volume = fragments_volume(buf);
  shape.faces.reserve(buf.count);
  for (int i = 0; i < buf.count; ++i) {
    const Fragment& f = buf.frags[i];
    shape.faces.push_back({{f.a, f.b, f.c}, f.source});
  }
  return shape;
}

double iou3d(const Cuboid& a, const Cuboid& b) {
  return pair_iou_exact(BoxGeom(a), BoxGeom(b));
}

double iou3d_approx_groundplane(const Cuboid& a, const Cuboid& b) {
  return pair_iou_approx(Footprint(a), Footprint(b));
}

IoUMatrix iou3d_batched(std::span<const Cuboid> preds, std::span<const Cuboid> gts,
                        int threads, IoUKernel kernel) {
  IoUMatrix m;
  m.rows = preds.size();
  m.cols = gts.size();
  m.values.assign(m.rows * m.cols, 0.0);
  if (m.values.empty()) return m;

  const std::size_t total = m.rows * m.cols;
  std::size_t want = threads > 0 ? static_cast<std::size_t>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  want = std::min(want, total);

  auto run = [&](auto&& entry) {
    if (want <= 1) {
      for (std::size_t k = 0; k < total; ++k) m.values[k] = entry(k / m.cols, k % m.cols);
      return;
    }
    std::vector<std::thread> pool;
    pool.reserve(want);
    const std::size_t chunk = (total + want - 1) / want;
    for (std::size_t t = 0; t < want; ++t) {
      const std::size_t k0 = t * chunk;
      const std::size_t k1 = std::min(total, k0 + chunk);
      if (k0 >= k1) break;
      pool.emplace_back([&, k0, k1] {
        for (std::size_t k = k0; k < k1; ++k) m.values[k] = entry(k / m.cols, k % m.cols);
      });
    }
    for (auto& th : pool) th.join();
  };

  if (kernel == IoUKernel::exact) {
    std::vector<BoxGeom> ga, gb;
    ga.reserve(m.rows);
    gb.reserve(m.cols);
    for (const Cuboid& c : preds) ga.emplace_back(c);
    for (const Cuboid& c : gts) gb.emplace_back(c);
    run([&](std::size_t i, std::size_t j) {
      if (aabb_disjoint(ga[i], gb[j])) return 0.0;  // exact kernel would return 0 too
      return pair_iou_exact(ga[i], gb[j]);
    });
  } else {
    std::vector<Footprint> fa, fb;
    fa.reserve(m.rows);
    fb.reserve(m.cols);
    for (const Cuboid& c : preds) fa.emplace_back(c);
    for (const Cuboid& c : gts) fb.emplace_back(c);
    run([&](std::size_t i, std::size_t j) { return pair_iou_approx(fa[i], fb[j]); });
  }
  return m;
}

McEstimate mc_iou_oracle(const Cuboid& a, const Cuboid& b, std::uint64_t samples,
                         std::uint64_t seed) {
  if (samples < 1) fail(Error::Kind::invalid_argument, "sample count must be >= 1");

  const BoxGeom ga(a), gb(b);
  const Vec3 lo = ga.aabb_lo.cwiseMin(gb.aabb_lo);
  const Vec3 hi = ga.aabb_hi.cwiseMax(gb.aabb_hi);
  const Vec3 span = hi - lo;

  // Row-major rotation transposes and half extents, unrolled for the hot loop.
  double ra[9], rb[9], ca[3], cb[3], ha[3], hb[3];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      ra[3 * i + j] = a.rotation()(j, i);
      rb[3 * i + j] = b.rotation()(j, i);
    }
    ca[i] = a.center()[i];
    cb[i] = b.center()[i];
    ha[i] = 0.5 * a.dims()[i];
    hb[i] = 0.5 * b.dims()[i];
  }

  auto inside = [](const double* r, const double* c, const double* h, double x, double y,
                   double z) {
    const double qx = x - c[0], qy = y - c[1], qz = z - c[2];
    return std::abs(r[0] * qx + r[1] * qy + r[2] * qz) <= h[0] &&
           std::abs(r[3] * qx + r[4] * qy + r[5] * qz) <= h[1] &&
           std::abs(r[6] * qx + r[7] * qy + r[8] * qz) <= h[2];
  };

  SplitMix64 rng(seed);
  std::uint64_t in_both = 0, in_union = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const double x = lo.x() + span.x() * rng.uniform();
    const double y = lo.y() + span.y() * rng.uniform();
    const double z = lo.z() + span.z() * rng.uniform();
    const bool ia = inside(ra, ca, ha, x, y, z);
    const bool ib = inside(rb, cb, hb, x, y, z);
    in_union += (ia || ib) ? 1 : 0;
    in_both += (ia && ib) ? 1 : 0;
  }

  McEstimate out;
  out.in_union = in_union;
  out.in_both = in_both;
  if (in_union > 0) {
    out.estimate = static_cast<double>(in_both) / static_cast<double>(in_union);
    out.std_error =
        std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(in_union));
  }
  return out;
}

}  // namespace cubeval
