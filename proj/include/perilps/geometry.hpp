#pragma once

#include "perilps/core.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>

namespace perilps {

// ---------------------------------------------------------------------------
// Domains
//
// Benchmark geometry is signed-distance based. Each domain carries, besides
// the SDF of the body, unsigned distances to the Dirichlet and Neumann parts
// of the boundary, a bond-crossing predicate for the Neumann surface, and an
// optional exact projection onto it. At a corner where a straight Neumann
// edge meets a Dirichlet edge, the crossing surface is the edge's full line:
// the broken set of a near-corner stencil then stays symmetric about the edge
// normal, which keeps the uniform-grid patch test exact.
// ---------------------------------------------------------------------------

struct AABB {
  Vec2 lo{0, 0};
  Vec2 hi{0, 0};
  double diag() const { return (hi - lo).norm(); }
};

struct SurfacePoint {
  Vec2 point;   // closest point on the Neumann surface
  Vec2 normal;  // unit normal pointing out of the body
};

struct Domain {
  std::string id;
  std::function<double(const Vec2&)> sdf;             // < 0 inside the body
  std::function<double(const Vec2&)> dirichlet_dist;  // unsigned distance to the Dirichlet part
  std::function<double(const Vec2&)> neumann_dist;    // unsigned distance to the Neumann part
  std::function<bool(const Vec2&, const Vec2&)> crosses_neumann;
  std::function<std::optional<SurfacePoint>(const Vec2&)> project_neumann;
  AABB bbox;
  bool has_dirichlet = false;
  bool has_neumann = false;
};

namespace detail {

inline double dist_to_segment(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

// Strict proper intersection of segment pq with segment ab; touching endpoints
// or tangency do not count (touching bonds stay intact).
inline bool segments_cross(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  auto orient = [](const Vec2& u, const Vec2& v, const Vec2& w) {
    return (v.x() - u.x()) * (w.y() - u.y()) - (v.y() - u.y()) * (w.x() - u.x());
  };
  const double o1 = orient(p, q, a);
  const double o2 = orient(p, q, b);
  const double o3 = orient(a, b, p);
  const double o4 = orient(a, b, q);
  return (o1 * o2 < 0.0) && (o3 * o4 < 0.0);
}

// Bond-breaking test against the circle |x - c| = r bounding a hole (material
// outside). Broken when an endpoint sits strictly inside the hole or the chord
// between two material points dips strictly inside; tangency stays intact.
inline bool bond_crosses_hole(const Vec2& p, const Vec2& q, const Vec2& c, double r) {
  const double dp = (p - c).norm() - r;
  const double dq = (q - c).norm() - r;
  if (dp < 0.0 || dq < 0.0) return true;
  const Vec2 d = q - p;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return false;
  const double t = (c - p).dot(d) / len2;
  if (t <= 0.0 || t >= 1.0) return false;
  return (p + t * d - c).norm() < r;
}

}  // namespace detail

enum class SquareNeumann { None, Top, TopRight };

// Square [-half, half]^2. The Neumann part is empty, the top edge, or the
// top+right edges; the rest of the perimeter is Dirichlet.
inline Domain make_square(double half, SquareNeumann which) {
  Domain d;
  d.id = which == SquareNeumann::None ? "square_dirichlet"
         : which == SquareNeumann::Top ? "square_top_neumann"
                                       : "square_corner_neumann";
  d.bbox = {Vec2(-half, -half), Vec2(half, half)};
  d.sdf = [half](const Vec2& x) { return std::max(std::abs(x.x()), std::abs(x.y())) - half; };

  const Vec2 tl(-half, half), tr(half, half), br(half, -half), bl(-half, -half);
  std::vector<std::pair<Vec2, Vec2>> n_edges, d_edges;
  if (which == SquareNeumann::None) {
    d_edges = {{tl, tr}, {tr, br}, {br, bl}, {bl, tl}};
  } else if (which == SquareNeumann::Top) {
    n_edges = {{tl, tr}};
    d_edges = {{tr, br}, {br, bl}, {bl, tl}};
  } else {
    n_edges = {{tl, tr}, {tr, br}};
    d_edges = {{br, bl}, {bl, tl}};
  }
  auto edge_dist = [](const std::vector<std::pair<Vec2, Vec2>>& edges, const Vec2& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : edges) best = std::min(best, detail::dist_to_segment(x, a, b));
    return best;
  };
  d.dirichlet_dist = [d_edges, edge_dist](const Vec2& x) { return edge_dist(d_edges, x); };
  d.neumann_dist = [n_edges, edge_dist](const Vec2& x) { return edge_dist(n_edges, x); };
  d.has_dirichlet = !d_edges.empty();
  d.has_neumann = !n_edges.empty();

  if (which == SquareNeumann::None) {
    d.crosses_neumann = [](const Vec2&, const Vec2&) { return false; };
    d.project_neumann = [](const Vec2&) { return std::nullopt; };
  } else if (which == SquareNeumann::Top) {
    // Crossing surface is the full line y = half (extended past the D/N corners):
    // broken whenever either endpoint lies strictly above it.
    d.crosses_neumann = [half](const Vec2& p, const Vec2& q) {
      return p.y() > half || q.y() > half;
    };
    d.project_neumann = [half](const Vec2& x) -> std::optional<SurfacePoint> {
      if (std::abs(x.x()) >= half) return std::nullopt;  // projection hits a corner
      return SurfacePoint{Vec2(x.x(), half), Vec2(0, 1)};
    };
  } else {
    // Top+right edges: crossing surface is the boundary of {x > half or y > half},
    // i.e. the zero set of max(x, y) - half.
    d.crosses_neumann = [half](const Vec2& p, const Vec2& q) {
      return std::max(p.x(), p.y()) > half || std::max(q.x(), q.y()) > half;
    };
    d.project_neumann = [half](const Vec2& x) -> std::optional<SurfacePoint> {
      const bool near_top = std::abs(x.y() - half) < std::abs(x.x() - half);
      if (near_top) {
        if (x.x() >= half || x.x() <= -half) return std::nullopt;
        return SurfacePoint{Vec2(x.x(), half), Vec2(0, 1)};
      }
      if (x.y() >= half || x.y() <= -half) return std::nullopt;
      return SurfacePoint{Vec2(half, x.y()), Vec2(1, 0)};
    };
  }
  return d;
}

// Unit-style square with a free-surface circular hole of radius a at the
// origin; the square perimeter is Dirichlet, the circle is Neumann.
inline Domain make_square_with_hole(double half, double a) {
  Domain d;
  d.id = "square_with_hole";
  d.bbox = {Vec2(-half, -half), Vec2(half, half)};
  d.sdf = [half, a](const Vec2& x) {
    return std::max(std::max(std::abs(x.x()), std::abs(x.y())) - half, a - x.norm());
  };
  d.dirichlet_dist = [half](const Vec2& x) {
    const double dx = std::abs(x.x()) - half, dy = std::abs(x.y()) - half;
    // distance to the square perimeter
    if (dx <= 0 && dy <= 0) return -std::max(dx, dy);
    const double ox = std::max(dx, 0.0), oy = std::max(dy, 0.0);
    return std::hypot(ox, oy);
  };
  d.neumann_dist = [a](const Vec2& x) { return std::abs(x.norm() - a); };
  d.crosses_neumann = [a](const Vec2& p, const Vec2& q) {
    return detail::bond_crosses_hole(p, q, Vec2(0, 0), a);
  };
  d.project_neumann = [a](const Vec2& x) -> std::optional<SurfacePoint> {
    const double r = x.norm();
    if (r < 1e-14) return std::nullopt;
    return SurfacePoint{a * x / r, -x / r};  // out of the body = into the hole
  };
  d.has_dirichlet = true;
  d.has_neumann = true;
  return d;
}

// Annulus R0 < r < R1. The inner circle is always Neumann; the outer circle
// is Dirichlet (hollow-disk benchmark) or Neumann (ring fragmentation).
inline Domain make_annulus(double R0, double R1, bool outer_dirichlet) {
  Domain d;
  d.id = outer_dirichlet ? "annulus_outer_dirichlet" : "annulus_free";
  d.bbox = {Vec2(-R1, -R1), Vec2(R1, R1)};
  d.sdf = [R0, R1](const Vec2& x) {
    const double r = x.norm();
    return std::max(r - R1, R0 - r);
  };
  if (outer_dirichlet) {
    d.dirichlet_dist = [R1](const Vec2& x) { return std::abs(x.norm() - R1); };
    d.neumann_dist = [R0](const Vec2& x) { return std::abs(x.norm() - R0); };
    d.crosses_neumann = [R0](const Vec2& p, const Vec2& q) {
      return detail::bond_crosses_hole(p, q, Vec2(0, 0), R0);
    };
    d.has_dirichlet = true;
  } else {
    d.dirichlet_dist = [](const Vec2&) { return std::numeric_limits<double>::infinity(); };
    d.neumann_dist = [R0, R1](const Vec2& x) {
      const double r = x.norm();
      return std::min(std::abs(r - R0), std::abs(R1 - r));
    };
    d.crosses_neumann = [R0, R1](const Vec2& p, const Vec2& q) {
      if (detail::bond_crosses_hole(p, q, Vec2(0, 0), R0)) return true;
      return p.norm() > R1 || q.norm() > R1;  // the outer disk is convex
    };
  }
  d.project_neumann = [R0, R1, outer_dirichlet](const Vec2& x) -> std::optional<SurfacePoint> {
    const double r = x.norm();
    if (r < 1e-14) return std::nullopt;
    const Vec2 er = x / r;
    if (!outer_dirichlet && std::abs(r - R1) < std::abs(r - R0))
      return SurfacePoint{R1 * er, er};
    return SurfacePoint{R0 * er, -er};
  };
  d.has_neumann = true;
  return d;
}

// Axis-aligned rectangle with the whole perimeter treated as a Neumann
// (traction/free) surface; used by the fracture benchmarks.
inline Domain make_rectangle_free(const AABB& box) {
  Domain d;
  d.id = "rectangle_free";
  d.bbox = box;
  const Vec2 c = 0.5 * (box.lo + box.hi);
  const Vec2 half = 0.5 * (box.hi - box.lo);
  auto box_sdf = [c, half](const Vec2& x) {
    const Vec2 q = (x - c).cwiseAbs() - half;
    const Vec2 qp = q.cwiseMax(0.0);
    return qp.norm() + std::min(std::max(q.x(), q.y()), 0.0);
  };
  d.sdf = box_sdf;
  d.dirichlet_dist = [](const Vec2&) { return std::numeric_limits<double>::infinity(); };
  d.neumann_dist = [box_sdf](const Vec2& x) { return std::abs(box_sdf(x)); };
  d.crosses_neumann = [box_sdf](const Vec2& p, const Vec2& q) {
    return box_sdf(p) > 0.0 || box_sdf(q) > 0.0;  // rectangle is convex
  };
  d.project_neumann = [c, half](const Vec2& x) -> std::optional<SurfacePoint> {
    const Vec2 r = x - c;
    const double gx = half.x() - std::abs(r.x());
    const double gy = half.y() - std::abs(r.y());
    if (std::abs(gx - gy) < 1e-14) return std::nullopt;  // corner bisector
    if (gy < gx) {
      const double sy = r.y() >= 0 ? 1.0 : -1.0;
      return SurfacePoint{Vec2(x.x(), c.y() + sy * half.y()), Vec2(0, sy)};
    }
    const double sx = r.x() >= 0 ? 1.0 : -1.0;
    return SurfacePoint{Vec2(c.x() + sx * half.x(), x.y()), Vec2(sx, 0)};
  };
  d.has_neumann = true;
  return d;
}

// Rectangle with a triangular V-notch cut into the left edge at mid-height.
// All boundary is Neumann.
inline Domain make_vnotch_plate(double width, double height, double notch_depth,
                                double notch_half_angle_rad) {
  Domain d;
  d.id = "vnotch_plate";
  d.bbox = {Vec2(0, 0), Vec2(width, height)};
  const double y0 = 0.5 * height;
  const double hw = notch_depth * std::tan(notch_half_angle_rad);  // notch half-width at the mouth
  // Polygon, counter-clockwise.
  std::vector<Vec2> poly = {Vec2(0, 0),           Vec2(width, 0),      Vec2(width, height),
                            Vec2(0, height),      Vec2(0, y0 + hw),    Vec2(notch_depth, y0),
                            Vec2(0, y0 - hw)};
  auto inside = [poly](const Vec2& x) {
    bool in = false;  // ray casting
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[j];
      if ((a.y() > x.y()) != (b.y() > x.y()) &&
          x.x() < (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x())
        in = !in;
    }
    return in;
  };
  auto boundary_dist = [poly](const Vec2& x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
      best = std::min(best, detail::dist_to_segment(x, poly[i], poly[j]));
    return best;
  };
  d.sdf = [inside, boundary_dist](const Vec2& x) {
    const double dist = boundary_dist(x);
    return inside(x) ? -dist : dist;
  };
  d.dirichlet_dist = [](const Vec2&) { return std::numeric_limits<double>::infinity(); };
  d.neumann_dist = boundary_dist;
  const double beyond_tol = 1e-9 * std::max(width, height);
  auto sdf_fn = [inside, boundary_dist](const Vec2& x) {
    const double dist = boundary_dist(x);
    return inside(x) ? -dist : dist;
  };
  d.crosses_neumann = [poly, sdf_fn, beyond_tol](const Vec2& p, const Vec2& q) {
    if (sdf_fn(p) > beyond_tol || sdf_fn(q) > beyond_tol) return true;
    // The polygon is non-convex: in-in bonds may still cut across the notch wedge.
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
      if (detail::segments_cross(p, q, poly[i], poly[j])) return true;
    return false;
  };
  d.project_neumann = [](const Vec2&) { return std::nullopt; };  // estimated frames only
  d.has_neumann = true;
  return d;
}

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

enum class Region : std::uint8_t {
  InteriorBulk,
  InteriorNearNeumann,
  DirichletCollar,
  ExteriorNeumann,
  Unused,
};

inline const char* region_name(Region r) {
  switch (r) {
    case Region::InteriorBulk: return "interior";
    case Region::InteriorNearNeumann: return "interior_near_neumann";
    case Region::DirichletCollar: return "dirichlet_collar";
    case Region::ExteriorNeumann: return "exterior_neumann";
    default: return "unused";
  }
}

struct PointCloud {
  std::vector<Vec2> positions;
  std::vector<double> cell_measure;
  std::vector<Region> region;
  std::vector<double> dist_d;  // unsigned distance to the Dirichlet boundary part
  std::vector<double> dist_n;  // unsigned distance to the Neumann boundary part
  std::vector<std::pair<std::int32_t, std::int32_t>> lattice;  // generating lattice indices
  double h = 0;
  double delta = 0;

  // neighbor lists, CSR layout
  std::vector<Index> nbr_offset;
  std::vector<Index> nbr;

  Index dirichlet_tie_count = 0;

  Index size() const { return static_cast<Index>(positions.size()); }
  bool in_omega(Index i) const {
    return region[i] == Region::InteriorBulk || region[i] == Region::InteriorNearNeumann;
  }
  Index nbr_begin(Index i) const { return nbr_offset[i]; }
  Index nbr_end(Index i) const { return nbr_offset[i + 1]; }
  Index degree(Index i) const { return nbr_end(i) - nbr_begin(i); }
};

// Assign region tags from the domain geometry. The exterior splits by the
// nearer boundary part; exact ties go to the Dirichlet side.
inline void classify_regions(PointCloud& cloud, const Domain& domain) {
  const double delta = cloud.delta;
  const double in_tol = 1e-9 * cloud.h;
  const double tie_tol = 1e-12;
  cloud.dirichlet_tie_count = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    const Vec2& x = cloud.positions[i];
    const double s = domain.sdf(x);
    const double dd = domain.has_dirichlet ? domain.dirichlet_dist(x)
                                           : std::numeric_limits<double>::infinity();
    const double dn = domain.has_neumann ? domain.neumann_dist(x)
                                         : std::numeric_limits<double>::infinity();
    cloud.dist_d[i] = dd;
    cloud.dist_n[i] = dn;
    if (s <= in_tol) {
      cloud.region[i] = dn < delta ? Region::InteriorNearNeumann : Region::InteriorBulk;
      continue;
    }
    const bool tie = std::isfinite(dd) && std::isfinite(dn) && std::abs(dd - dn) <= tie_tol;
    if (tie) ++cloud.dirichlet_tie_count;
    if (dd <= dn + tie_tol) {
      cloud.region[i] = dd < 2.0 * delta ? Region::DirichletCollar : Region::Unused;
    } else {
      cloud.region[i] = dn < delta ? Region::ExteriorNeumann : Region::Unused;
    }
  }
}

// Perturbed Cartesian lattice over the domain bbox inflated by 2*delta.
// Points deeper than the retention bands (2δ across Dirichlet, δ across
// Neumann) are dropped. Positions are bit-reproducible for a given seed: the
// perturbation stream is keyed on absolute lattice indices. The cell-centered
// variant shifts the lattice by h/2 so no point lands on the bbox boundary;
// the fracture benchmarks use it so a mid-plane pre-crack separates rows.
inline PointCloud generate_grid(const Domain& domain, double h, double delta, double perturb_r,
                                std::uint64_t seed, bool cell_centered = false) {
  if (h <= 0) throw ConfigError("grid spacing must be positive");
  if (perturb_r < 0 || perturb_r > 0.2) throw ConfigError("perturbation ratio must lie in [0, 0.2]");
  const double margin = 2.0 * delta;
  const auto span_x = domain.bbox.hi.x() - domain.bbox.lo.x();
  const auto span_y = domain.bbox.hi.y() - domain.bbox.lo.y();
  if (h > span_x || h > span_y) throw ConfigError("grid spacing exceeds domain bounding box");

  const int mcells = static_cast<int>(std::ceil(margin / h - 1e-12));
  const int nx = static_cast<int>(std::round(span_x / h));
  const int ny = static_cast<int>(std::round(span_y / h));
  const double off = cell_centered ? 0.5 * h : 0.0;

  PointCloud cloud;
  cloud.h = h;
  cloud.delta = delta;

  for (int j = -mcells; j <= ny + mcells; ++j) {
    for (int i = -mcells; i <= nx + mcells; ++i) {
      Vec2 x(domain.bbox.lo.x() + off + i * h, domain.bbox.lo.y() + off + j * h);
      if (perturb_r > 0) {
        const double ux = u01(mix_key(seed, i, 2 * j));
        const double uy = u01(mix_key(seed, i, 2 * j + 1));
        x.x() += perturb_r * h * (2.0 * ux - 1.0);
        x.y() += perturb_r * h * (2.0 * uy - 1.0);
      }
      cloud.positions.push_back(x);
      cloud.lattice.emplace_back(i, j);
    }
  }
  const Index n = cloud.size();
  cloud.cell_measure.assign(n, h * h);
  cloud.region.assign(n, Region::Unused);
  cloud.dist_d.assign(n, 0.0);
  cloud.dist_n.assign(n, 0.0);
  classify_regions(cloud, domain);

  // Compact away unused points.
  PointCloud out;
  out.h = h;
  out.delta = delta;
  out.dirichlet_tie_count = cloud.dirichlet_tie_count;
  for (Index i = 0; i < n; ++i) {
    if (cloud.region[i] == Region::Unused) continue;
    out.positions.push_back(cloud.positions[i]);
    out.cell_measure.push_back(cloud.cell_measure[i]);
    out.region.push_back(cloud.region[i]);
    out.dist_d.push_back(cloud.dist_d[i]);
    out.dist_n.push_back(cloud.dist_n[i]);
    out.lattice.push_back(cloud.lattice[i]);
  }
  if (out.positions.empty()) throw ConfigError("no points retained; check domain and spacing");
  return out;
}

// δ-ball neighbor lists via uniform binning; self excluded.
inline void build_neighbors(PointCloud& cloud) {
  const Index n = cloud.size();
  const double delta = cloud.delta;
  const double r2max = delta * delta * (1.0 + 1e-12);

  Vec2 lo = cloud.positions[0];
  for (const auto& p : cloud.positions) lo = lo.cwiseMin(p);
  const double bin = delta;
  auto bin_of = [&](const Vec2& p) {
    return std::pair<std::int64_t, std::int64_t>{
        static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / bin)),
        static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / bin))};
  };
  std::unordered_map<std::int64_t, std::vector<Index>> bins;
  auto key = [](std::int64_t bx, std::int64_t by) { return (bx << 32) ^ (by & 0xffffffff); };
  for (Index i = 0; i < n; ++i) {
    auto [bx, by] = bin_of(cloud.positions[i]);
    bins[key(bx, by)].push_back(i);
  }

  cloud.nbr_offset.assign(n + 1, 0);
  cloud.nbr.clear();
  std::vector<Index> scratch;
  for (Index i = 0; i < n; ++i) {
    scratch.clear();
    const Vec2& xi = cloud.positions[i];
    auto [bx, by] = bin_of(xi);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        auto it = bins.find(key(bx + dx, by + dy));
        if (it == bins.end()) continue;
        for (Index j : it->second) {
          if (j == i) continue;
          if ((cloud.positions[j] - xi).squaredNorm() <= r2max) scratch.push_back(j);
        }
      }
    }
    std::sort(scratch.begin(), scratch.end());
    cloud.nbr.insert(cloud.nbr.end(), scratch.begin(), scratch.end());
    cloud.nbr_offset[i + 1] = static_cast<Index>(cloud.nbr.size());
  }
}

}  // namespace perilps
