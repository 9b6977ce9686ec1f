#include "perilps/quadrature.hpp"

#include <gtest/gtest.h>

using namespace perilps;

namespace {

// Independent oracle: fine polar midpoint rule for the singular ball moments.
double polar_moment_oracle(int a, int b, double delta, int nr = 4000, int nt = 4000) {
  double acc = 0;
  const double dr = delta / nr;
  const double dt = 2 * kPi / nt;
  for (int ir = 0; ir < nr; ++ir) {
    const double r = (ir + 0.5) * dr;
    const double radial = std::pow(r, a + b) / (r * r * r) * r;  // integrand * jacobian
    double ang = 0;
    for (int it = 0; it < nt; ++it) {
      const double th = (it + 0.5) * dt;
      ang += std::pow(std::cos(th), a) * std::pow(std::sin(th), b);
    }
    acc += radial * ang * dr * dt;
  }
  return acc;
}

PointCloud interior_cloud(double h, double m, double perturb = 0.0, std::uint64_t seed = 0) {
  const Domain d = make_square(kPi / 2, SquareNeumann::None);
  PointCloud c = generate_grid(d, h, m * h, perturb, seed);
  build_neighbors(c);
  return c;
}

Index find_interior_point(const PointCloud& c) {
  for (Index i = 0; i < c.size(); ++i) {
    const Vec2& x = c.positions[i];
    if (std::max(std::abs(x.x()), std::abs(x.y())) < kPi / 2 - 1.5 * c.delta) return i;
  }
  throw std::runtime_error("no interior point");
}

}  // namespace

TEST(BallMoments, MatchPolarOracle) {
  // frozen values from the oracle (relative tolerance 1e-6)
  EXPECT_NEAR(exact_ball_moment(2, 0, 0.1), 0.3141593, 1e-6 * 0.3141593 + 1e-9);
  EXPECT_NEAR(exact_ball_moment(2, 2, 1.0), 0.2617994, 1e-6 * 0.2617994 + 1e-9);
  EXPECT_NEAR(exact_ball_moment(2, 0, 0.1), polar_moment_oracle(2, 0, 0.1),
              1e-6 * exact_ball_moment(2, 0, 0.1));
  EXPECT_NEAR(exact_ball_moment(2, 2, 1.0), polar_moment_oracle(2, 2, 1.0),
              1e-6 * exact_ball_moment(2, 2, 1.0));
  EXPECT_NEAR(exact_ball_moment(4, 0, 0.7), polar_moment_oracle(4, 0, 0.7),
              1e-6 * exact_ball_moment(4, 0, 0.7));
  // odd angular symmetry
  EXPECT_DOUBLE_EQ(exact_ball_moment(1, 1, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(exact_ball_moment(3, 2, 0.3), 0.0);
}

TEST(BallMoments, RejectsNonIntegrable) {
  EXPECT_THROW(exact_ball_moment(0, 0, 0.1), NonIntegrable);
  EXPECT_THROW(exact_ball_moment(1, 0, 0.1), NonIntegrable);
}

TEST(Basis, Has18Members) {
  EXPECT_EQ(ReproducingBasis::size, 18);
  const auto& e = ReproducingBasis::exponents();
  for (const auto& [a, b] : e) {
    EXPECT_GE(a + b, 2);
    EXPECT_LE(a + b, 5);
  }
}

TEST(SolveWeights, ReproducesMomentsOnUniformAndPerturbedStencils) {
  for (double perturb : {0.0, 0.2}) {
    const PointCloud c = interior_cloud(kPi / 16, 3.5, perturb, 11);
    const ReproducingBasis basis(c.delta);
    const Index i = find_interior_point(c);
    const Eigen::VectorXd w = solve_weights(c, i, basis);
    for (int k = 0; k < ReproducingBasis::size; ++k) {
      double acc = 0;
      for (Index kk = c.nbr_begin(i), col = 0; kk < c.nbr_end(i); ++kk, ++col)
        acc += w(col) * basis.value(k, c.positions[c.nbr[kk]] - c.positions[i]);
      EXPECT_NEAR(acc, basis.moment(k), 1e-9 * std::abs(basis.moment(k)) + 1e-12)
          << "member " << k << " perturb " << perturb;
    }
  }
}

TEST(SolveWeights, StencilSymmetryOrbitsShareWeights) {
  const PointCloud c = interior_cloud(kPi / 16, 3.5);
  const ReproducingBasis basis(c.delta);
  const Index i = find_interior_point(c);
  const Eigen::VectorXd w = solve_weights(c, i, basis);
  // weights on the 8-fold symmetry orbit of a lattice offset agree
  const double h = c.h;
  auto weight_at = [&](int dx, int dy) {
    for (Index kk = c.nbr_begin(i), col = 0; kk < c.nbr_end(i); ++kk, ++col) {
      const Vec2 d = c.positions[c.nbr[kk]] - c.positions[i];
      if (std::abs(d.x() - dx * h) < 1e-12 && std::abs(d.y() - dy * h) < 1e-12) return w(col);
    }
    throw std::runtime_error("offset not found");
  };
  const double ref = weight_at(1, 2);
  for (auto [dx, dy] : std::vector<std::pair<int, int>>{
           {2, 1}, {-1, 2}, {2, -1}, {1, -2}, {-2, 1}, {-1, -2}, {-2, -1}})
    EXPECT_NEAR(weight_at(dx, dy), ref, 1e-10 * std::abs(ref));
}

TEST(SolveWeights, WeightedVolumeReproduced) {
  // sum_j w_j |x_j - x_i|^2 K(|x_j - x_i|) = m(delta) = 2 pi delta^3 / 3
  for (double perturb : {0.0, 0.15}) {
    const PointCloud c = interior_cloud(kPi / 16, 3.5, perturb, 5);
    const ReproducingBasis basis(c.delta);
    const Index i = find_interior_point(c);
    const Eigen::VectorXd w = solve_weights(c, i, basis);
    double acc = 0;
    for (Index kk = c.nbr_begin(i), col = 0; kk < c.nbr_end(i); ++kk, ++col)
      acc += w(col) * (c.positions[c.nbr[kk]] - c.positions[i]).norm();
    const double m = 2 * kPi * std::pow(c.delta, 3) / 3.0;
    EXPECT_NEAR(acc, m, 1e-9 * m);
  }
}

TEST(SolveWeights, MinNormMatchesDenseKkt) {
  // brute-force KKT solve of the equality-constrained QP on a 20-point stencil
  PointCloud c;
  c.h = 0.1;
  c.delta = 0.35;
  std::uint64_t s = 77;
  c.positions.push_back(Vec2(0, 0));
  for (int k = 0; k < 20; ++k) {
    const double r = 0.08 + 0.25 * u01(splitmix64(s));
    const double th = 2 * kPi * u01(splitmix64(s));
    c.positions.push_back(Vec2(r * std::cos(th), r * std::sin(th)));
  }
  const Index n = c.size();
  c.cell_measure.assign(n, 0.01);
  c.region.assign(n, Region::InteriorBulk);
  c.dist_d.assign(n, 1.0);
  c.dist_n.assign(n, std::numeric_limits<double>::infinity());
  c.lattice.assign(n, {0, 0});
  build_neighbors(c);

  const ReproducingBasis basis(c.delta);
  const Eigen::VectorXd w = solve_weights(c, 0, basis);

  const Index nb = c.degree(0);
  Eigen::MatrixXd B(ReproducingBasis::size, nb);
  Eigen::VectorXd g(ReproducingBasis::size);
  for (Index col = 0; col < nb; ++col)
    for (int k = 0; k < ReproducingBasis::size; ++k)
      B(k, col) = basis.value(k, c.positions[c.nbr[c.nbr_begin(0) + col]] - c.positions[0]);
  for (int k = 0; k < ReproducingBasis::size; ++k) g(k) = basis.moment(k);

  const Index kkt_n = nb + ReproducingBasis::size;
  Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(kkt_n, kkt_n);
  KKT.topLeftCorner(nb, nb).setIdentity();
  KKT.topRightCorner(nb, ReproducingBasis::size) = B.transpose();
  KKT.bottomLeftCorner(ReproducingBasis::size, nb) = B;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kkt_n);
  rhs.tail(ReproducingBasis::size) = g;
  const Eigen::VectorXd sol = KKT.fullPivLu().solve(rhs);
  EXPECT_LT((w - sol.head(nb)).norm(), 1e-8 * std::max(1.0, w.norm()));
}

TEST(SolveWeights, ScaleCovariance) {
  const double scale = 7.0;
  const PointCloud c = interior_cloud(kPi / 16, 3.5, 0.1, 21);
  PointCloud scaled = c;
  for (auto& p : scaled.positions) p *= scale;
  scaled.h *= scale;
  scaled.delta *= scale;
  const Index i = find_interior_point(c);
  const Eigen::VectorXd w = solve_weights(c, i, ReproducingBasis(c.delta));
  const Eigen::VectorXd ws = solve_weights(scaled, i, ReproducingBasis(scaled.delta));
  for (Index k = 0; k < w.size(); ++k)
    EXPECT_NEAR(ws(k), scale * scale * w(k), 1e-10 * std::abs(scale * scale * w(k)) + 1e-14);
}

TEST(SolveWeights, NegativeWeightFractionSmall) {
  for (double perturb : {0.0, 0.2}) {
    const PointCloud c = interior_cloud(kPi / 16, 3.5, perturb, 13);
    const ReproducingBasis basis(c.delta);
    const Index i = find_interior_point(c);
    const Eigen::VectorXd w = solve_weights(c, i, basis);
    Index neg = 0;
    for (Index k = 0; k < w.size(); ++k)
      if (w(k) < 0) ++neg;
    EXPECT_LT(static_cast<double>(neg), 0.15 * static_cast<double>(w.size()));
  }
}

TEST(SolveWeights, CollinearStencilThrows) {
  PointCloud c;
  c.h = 0.1;
  c.delta = 0.5;
  c.positions.push_back(Vec2(0, 0));
  for (int k = 1; k <= 5; ++k) c.positions.push_back(Vec2(0.08 * k, 0));
  const Index n = c.size();
  c.cell_measure.assign(n, 0.01);
  c.region.assign(n, Region::InteriorBulk);
  c.dist_d.assign(n, 1.0);
  c.dist_n.assign(n, std::numeric_limits<double>::infinity());
  c.lattice.assign(n, {0, 0});
  build_neighbors(c);
  EXPECT_THROW(solve_weights(c, 0, ReproducingBasis(c.delta)), WeightsSingular);
}

TEST(MaskAndSplit, PartitionIsExact) {
  const Domain d = make_square(kPi / 2, SquareNeumann::Top);
  PointCloud c = generate_grid(d, kPi / 16, 3.5 * kPi / 16, 0.2, 4);
  build_neighbors(c);
  const QuadratureRule rule = build_quadrature(c);
  const Mask gamma = mask_from_domain(c, d);
  const auto [intact, broken] = split_weights(rule, gamma);
  for (std::size_t k = 0; k < rule.w.size(); ++k) {
    EXPECT_EQ(intact[k] + broken[k], rule.w[k]);  // exact, not approximate
    EXPECT_TRUE(intact[k] == 0.0 || broken[k] == 0.0);
  }
}

TEST(MaskAndSplit, AllIntactAndAllBroken) {
  const Domain d = make_square(kPi / 2, SquareNeumann::None);
  PointCloud c = generate_grid(d, kPi / 16, 3.5 * kPi / 16, 0, 0);
  build_neighbors(c);
  const QuadratureRule rule = build_quadrature(c);
  Mask gamma = mask_from_domain(c, d);
  for (auto g : gamma) EXPECT_EQ(g, 1);  // no Neumann boundary: every bond intact
  auto [intact, broken] = split_weights(rule, gamma);
  for (std::size_t k = 0; k < rule.w.size(); ++k) EXPECT_EQ(broken[k], 0.0);
  std::fill(gamma.begin(), gamma.end(), 0);
  std::tie(intact, broken) = split_weights(rule, gamma);
  for (std::size_t k = 0; k < rule.w.size(); ++k) EXPECT_EQ(intact[k], 0.0);
}

TEST(MaskAndSplit, HalfPlaneBrokenAreaMatchesHalfDisk) {
  // sum of broken weights approximates the half-disk area when the boundary
  // cuts the stencil through the center
  const Domain d = make_square(kPi / 2, SquareNeumann::Top);
  PointCloud c = generate_grid(d, kPi / 16, 3.5 * kPi / 16, 0, 0);
  build_neighbors(c);
  const QuadratureRule rule = build_quadrature(c);
  const Mask gamma = mask_from_domain(c, d);
  // find a point on the top edge itself
  Index top = -1;
  for (Index i = 0; i < c.size(); ++i)
    if (c.in_omega(i) && std::abs(c.positions[i].y() - kPi / 2) < 1e-12 &&
        std::abs(c.positions[i].x()) < kPi / 2 - 2 * c.delta)
      top = i;
  ASSERT_GE(top, 0);
  double broken_area = 0;
  for (Index k = c.nbr_begin(top); k < c.nbr_end(top); ++k)
    if (!gamma[k]) broken_area += rule.w[k];
  const double half_disk = 0.5 * kPi * c.delta * c.delta;
  EXPECT_NEAR(broken_area, half_disk, 1.5 * c.h * c.delta);
}

TEST(QuadratureRule, RuleCoverage) {
  const Domain d = make_annulus(1.0, 1.5, true);
  PointCloud c = generate_grid(d, 1.0 / 16, 3.5 / 16, 0, 0);
  build_neighbors(c);
  const QuadratureRule rule = build_quadrature(c);
  for (Index i = 0; i < c.size(); ++i) {
    if (c.in_omega(i)) EXPECT_TRUE(rule.has_rule[i]);
    if (c.region[i] == Region::ExteriorNeumann) EXPECT_FALSE(rule.has_rule[i]);
    if (c.region[i] == Region::DirichletCollar)
      EXPECT_EQ(static_cast<bool>(rule.has_rule[i]), c.dist_d[i] < c.delta);
  }
}
