#pragma once

#include "perilps/quadrature.hpp"

namespace perilps {

enum class FrameSource : std::uint8_t { Estimated, Exact };
enum class NormalMode : std::uint8_t { Estimated, Exact };

struct Frame {
  Vec2 n{0, 0};     // unit normal, out of the body
  Vec2 p{0, 0};     // unit tangent, n rotated +90 degrees
  Vec2 xbar{0, 0};  // boundary point where tractions are evaluated
  FrameSource source = FrameSource::Estimated;
  bool valid = false;
};

// n_i from the intact-weight first moment of the stencil; the traction
// evaluation point walks the Neumann distance along it.
inline Frame estimate_frame(const PointCloud& cloud, const QuadratureRule& rule, const Mask& gamma,
                            Index i) {
  Vec2 s(0, 0);
  double wscale = 0;
  const Vec2& xi = cloud.positions[i];
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
    if (!gamma[k]) continue;
    const double wt = rule.w[k];
    s += (cloud.positions[cloud.nbr[k]] - xi) * wt;
    wscale += std::abs(wt);
  }
  const double norm = s.norm();
  if (!(norm > 1e-12 * wscale * cloud.delta) || wscale == 0.0) throw FrameDegenerate(i);
  Frame f;
  f.n = -s / norm;
  f.p = Vec2(-f.n.y(), f.n.x());
  const double dn = std::isfinite(cloud.dist_n[i]) ? cloud.dist_n[i] : 0.0;
  f.xbar = xi + dn * f.n;
  f.source = FrameSource::Estimated;
  f.valid = true;
  return f;
}

// Frames for every material point with a broken bond. Exact mode uses the
// domain projection when it is unambiguous and falls back to the estimate at
// corners, where the traction is evaluated at the point itself with the
// estimated normal. A degenerate estimate keeps the previous frame when one
// exists.
inline std::vector<Frame> build_frames(const PointCloud& cloud, const QuadratureRule& rule,
                                       const Mask& gamma, const Domain& domain, NormalMode mode,
                                       const std::vector<Frame>* previous = nullptr) {
  std::vector<Frame> frames(cloud.size());
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!cloud.in_omega(i) || !rule.has_rule[i]) continue;
    if (!has_broken_bond(cloud, gamma, i)) continue;
    const auto projected = domain.project_neumann(cloud.positions[i]);
    if (mode == NormalMode::Exact && projected) {
      frames[i] = Frame{projected->normal, Vec2(-projected->normal.y(), projected->normal.x()),
                        projected->point, FrameSource::Exact, true};
      continue;
    }
    try {
      frames[i] = estimate_frame(cloud, rule, gamma, i);
      if (!projected) frames[i].xbar = cloud.positions[i];
    } catch (const FrameDegenerate&) {
      if (previous && (*previous)[i].valid) frames[i] = (*previous)[i];
      // otherwise left invalid; correction terms are skipped for this point
    }
  }
  return frames;
}

}  // namespace perilps
