#pragma once

#include "perilps/geometry.hpp"

#include <Eigen/SVD>

#include <array>

namespace perilps {

// ---------------------------------------------------------------------------
// Reproducing basis
//
// Integrands of the nonlocal operators with polynomial fields reduce to
// p(y)/|y-x|^3 with p quintic. The members with total degree 0 or 1 are not
// integrable against r^-3 in 2D, which leaves the 18 monomial pairs (a, b)
// with 2 <= a+b <= 5. Monomials are scaled by delta: the raw-moment spread
// across degrees 2..5 would otherwise condition the constraint matrix badly
// at small delta.
// ---------------------------------------------------------------------------

// Angular moment over the unit circle: \int cos^a sin^b dθ.
inline double angular_moment(int a, int b) {
  if (a % 2 != 0 || b % 2 != 0) return 0.0;
  auto dfac = [](int n) {
    double p = 1.0;
    for (int k = n; k > 1; k -= 2) p *= k;
    return p;
  };
  return 2.0 * kPi * dfac(a - 1) * dfac(b - 1) / dfac(a + b);
}

// \int_{B_delta(0)} y1^a y2^b / |y|^3 dy, unscaled basis.
inline double exact_ball_moment(int a, int b, double delta) {
  if (a < 0 || b < 0 || a + b < 2) throw NonIntegrable("need a, b >= 0 and a + b >= 2");
  const int m = a + b;
  return angular_moment(a, b) * std::pow(delta, m - 1) / static_cast<double>(m - 1);
}

struct ReproducingBasis {
  static constexpr int size = 18;
  double delta;

  explicit ReproducingBasis(double d) : delta(d) {}

  static const std::array<std::pair<int, int>, size>& exponents() {
    static const std::array<std::pair<int, int>, size> e = [] {
      std::array<std::pair<int, int>, size> out{};
      int k = 0;
      for (int deg = 2; deg <= 5; ++deg)
        for (int a = 0; a <= deg; ++a) out[k++] = {a, deg - a};
      return out;
    }();
    return e;
  }

  // Member k evaluated at the bond vector xi = y - x.
  double value(int k, const Vec2& xi) const {
    const auto [a, b] = exponents()[k];
    const double r = xi.norm();
    return std::pow(xi.x() / delta, a) * std::pow(xi.y() / delta, b) / (r * r * r);
  }

  // Exact integral of member k over the delta-ball.
  double moment(int k) const {
    const auto [a, b] = exponents()[k];
    return exact_ball_moment(a, b, delta) / std::pow(delta, a + b);
  }
};

// ---------------------------------------------------------------------------
// Optimization-based quadrature
//
// Per point, the weights are the minimum-norm solution of the moment
// constraints B w = g: argmin sum w^2 subject to reproducing every basis
// member exactly. Solved by SVD with relative truncation 1e-10; a residual
// above 1e-9 * |g| means the stencil is not unisolvent for this delta/h.
// ---------------------------------------------------------------------------

inline constexpr double kSvdTruncation = 1e-10;
inline constexpr double kMomentResidualTol = 1e-9;

inline Eigen::VectorXd solve_weights(const PointCloud& cloud, Index i, const ReproducingBasis& basis) {
  const Index nb = cloud.degree(i);
  if (nb < ReproducingBasis::size)
    throw WeightsSingular(i, "stencil smaller than the reproducing basis");

  Eigen::MatrixXd B(ReproducingBasis::size, nb);
  Eigen::VectorXd g(ReproducingBasis::size);
  const Vec2 xi_pos = cloud.positions[i];
  for (Index c = 0; c < nb; ++c) {
    const Vec2 xi = cloud.positions[cloud.nbr[cloud.nbr_begin(i) + c]] - xi_pos;
    for (int k = 0; k < ReproducingBasis::size; ++k) B(k, c) = basis.value(k, xi);
  }
  for (int k = 0; k < ReproducingBasis::size; ++k) g(k) = basis.moment(k);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kSvdTruncation);
  Eigen::VectorXd w = svd.solve(g);
  const double res = (B * w - g).norm();
  if (!(res <= kMomentResidualTol * g.norm()))
    throw WeightsSingular(i, "moment residual " + std::to_string(res) +
                                 "; cloud too sparse for this delta/h");
  return w;
}

// Bond mask and derived weight splits.
using Mask = std::vector<std::uint8_t>;

struct QuadratureRule {
  // CSR-aligned with PointCloud::nbr. Weights are generated once, in the
  // reference configuration; bond breaking only changes the mask.
  std::vector<double> w;
  std::vector<std::uint8_t> has_rule;  // per point

  double weight(const PointCloud& cloud, Index i, Index k) const { return w[cloud.nbr_begin(i) + k]; }
};

// Points that carry a quadrature rule: everything that owns an equation row
// (material points, plus the Dirichlet collar band within delta which carries
// dilatation rows).
inline bool needs_rule(const PointCloud& cloud, Index i) {
  if (cloud.in_omega(i)) return true;
  return cloud.region[i] == Region::DirichletCollar && cloud.dist_d[i] < cloud.delta;
}

inline QuadratureRule build_quadrature(const PointCloud& cloud) {
  QuadratureRule rule;
  rule.w.assign(cloud.nbr.size(), 0.0);
  rule.has_rule.assign(cloud.size(), 0);
  const ReproducingBasis basis(cloud.delta);
#pragma omp parallel for schedule(dynamic, 64)
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!needs_rule(cloud, i)) continue;
    const Eigen::VectorXd wi = solve_weights(cloud, i, basis);
    for (Index c = 0; c < cloud.degree(i); ++c) rule.w[cloud.nbr_begin(i) + c] = wi(c);
    rule.has_rule[i] = 1;
  }
  return rule;
}

// gamma_{j,i} = 0 where the bond crosses the Neumann surface.
inline Mask mask_from_domain(const PointCloud& cloud, const Domain& domain) {
  Mask gamma(cloud.nbr.size(), 1);
  if (!domain.has_neumann) return gamma;
  for (Index i = 0; i < cloud.size(); ++i) {
    const Vec2& xi = cloud.positions[i];
    for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
      if (domain.crosses_neumann(xi, cloud.positions[cloud.nbr[k]])) gamma[k] = 0;
    }
  }
  return gamma;
}

// Break every bond crossing a slit segment (pre-cracks).
inline void break_bonds_crossing_segment(const PointCloud& cloud, Mask& gamma, const Vec2& a,
                                         const Vec2& b) {
  for (Index i = 0; i < cloud.size(); ++i) {
    const Vec2& xi = cloud.positions[i];
    for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
      if (detail::segments_cross(xi, cloud.positions[cloud.nbr[k]], a, b)) gamma[k] = 0;
    }
  }
}

inline bool has_broken_bond(const PointCloud& cloud, const Mask& gamma, Index i) {
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k)
    if (!gamma[k]) return true;
  return false;
}

// Elementwise split w = w~ + w^ (intact, broken).
inline std::pair<std::vector<double>, std::vector<double>> split_weights(const QuadratureRule& rule,
                                                                         const Mask& gamma) {
  std::vector<double> intact(rule.w.size()), broken(rule.w.size());
  for (std::size_t k = 0; k < rule.w.size(); ++k) {
    intact[k] = gamma[k] ? rule.w[k] : 0.0;
    broken[k] = gamma[k] ? 0.0 : rule.w[k];
  }
  return {std::move(intact), std::move(broken)};
}

}  // namespace perilps
