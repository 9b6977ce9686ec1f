#pragma once

#include "perilps/lps.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>

namespace perilps {

// ---------------------------------------------------------------------------
// Boundary data
// ---------------------------------------------------------------------------

struct BoundaryConditions {
  // u_D on the Dirichlet collar.
  std::function<Vec2(const Vec2&)> dirichlet;
  // Traction vector on the Neumann surface, evaluated at the frame point xbar
  // with the frame normal.
  std::function<Vec2(const Vec2&, const Vec2&, double t)> traction;
  // Body load.
  std::function<Vec2(const Vec2&, double t)> body;
};

// ---------------------------------------------------------------------------
// Assembled mixed-BC system K eta = F with unknown blocks [u | v | theta].
// Displacement unknowns live on material points; dilatation unknowns live on
// material points plus the Dirichlet-collar band within delta. Collar
// displacements are eliminated into the right-hand side.
// ---------------------------------------------------------------------------

struct LpsSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd F_geom;  // Dirichlet eliminations, time-independent

  std::vector<Index> u_index;   // point -> u unknown slot, -1 if prescribed/absent
  std::vector<Index> th_index;  // point -> theta unknown slot, -1 if absent
  Index n_u = 0;
  Index n_th = 0;

  // per-point traction data for load evaluation
  std::vector<TractionCoeff> traction_coeff;
  std::vector<Frame> frames;
  std::vector<std::uint8_t> traction_active;

  Index rows() const { return 2 * n_u + n_th; }
  Index row_ux(Index i) const { return u_index[i]; }
  Index row_uy(Index i) const { return n_u + u_index[i]; }
  Index row_th(Index i) const { return 2 * n_u + th_index[i]; }
};

struct AssemblyOptions {
  // Mass augmentation 4*rho_i/dt^2 added to displacement diagonals (dynamics);
  // zero for statics.
  double mass_factor = 0.0;  // multiplies rho_i
  double time = 0.0;         // load evaluation time for F
};

namespace detail {

inline void scatter_u(std::vector<Eigen::Triplet<double>>& trips, Eigen::VectorXd& F,
                      const LpsSystem& sys, const BoundaryConditions& bcs, const PointCloud& cloud,
                      Index row, Index point, const Vec2& coeff) {
  if (sys.u_index[point] >= 0) {
    trips.emplace_back(row, sys.row_ux(point), coeff.x());
    trips.emplace_back(row, sys.row_uy(point), coeff.y());
  } else {
    if (!bcs.dirichlet) throw AssemblyError("missing Dirichlet data for collar point");
    F(row) -= coeff.dot(bcs.dirichlet(cloud.positions[point]));
  }
}

}  // namespace detail

inline LpsSystem assemble(const PointCloud& cloud, const QuadratureRule& rule, const Mask& gamma,
                          const KernelSpec& kernel, const MaterialField& material,
                          const std::vector<Frame>& frames, const BoundaryConditions& bcs,
                          const AssemblyOptions& opts = {}) {
  LpsSystem sys;
  const Index n = cloud.size();
  sys.u_index.assign(n, -1);
  sys.th_index.assign(n, -1);
  for (Index i = 0; i < n; ++i) {
    if (cloud.in_omega(i)) sys.u_index[i] = sys.n_u++;
  }
  for (Index i = 0; i < n; ++i) {
    if (rule.has_rule[i]) sys.th_index[i] = sys.n_th++;
  }
  sys.frames = frames;
  sys.traction_coeff.assign(n, {});
  sys.traction_active.assign(n, 0);

  const Index nrows = sys.rows();
  Eigen::VectorXd F = Eigen::VectorXd::Zero(nrows);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nrows) * 16);

  OpCtx ctx{cloud, rule, gamma, kernel, material, &frames};

  for (Index i = 0; i < n; ++i) {
    if (sys.th_index[i] < 0) continue;
    if (cloud.region[i] == Region::ExteriorNeumann)
      throw AssemblyError("exterior point carries a rule");

    const bool corrected = has_broken_bond(cloud, gamma, i);

    // dilatation row: theta_i - sum e_j . (u_j - u_i) = 0
    const Index rth = sys.row_th(i);
    trips.emplace_back(rth, rth, 1.0);
    Vec2 diag = Vec2::Zero();
    dilatation_terms(ctx, i, corrected, [&](Index j, const Vec2& e) {
      detail::scatter_u(trips, F, sys, bcs, cloud, rth, j, -e);
      diag += e;
    });
    detail::scatter_u(trips, F, sys, bcs, cloud, rth, i, diag);

    if (sys.u_index[i] < 0) continue;

    // momentum rows
    const Index rx = sys.row_ux(i);
    const Index ry = sys.row_uy(i);
    Mat2 u_diag = Mat2::Zero();
    Vec2 th_diag = Vec2::Zero();
    momentum_terms(
        ctx, i,
        [&](Index j, const Mat2& A) {
          detail::scatter_u(trips, F, sys, bcs, cloud, rx, j, A.row(0).transpose());
          detail::scatter_u(trips, F, sys, bcs, cloud, ry, j, A.row(1).transpose());
          u_diag -= A;
        },
        [&](Index j, const Vec2& b) {
          if (sys.th_index[j] < 0) throw AssemblyError("momentum row references untracked theta");
          trips.emplace_back(rx, sys.row_th(j), b.x());
          trips.emplace_back(ry, sys.row_th(j), b.y());
          th_diag += b;
        },
        [&](const Vec2& c) { th_diag += c; });
    detail::scatter_u(trips, F, sys, bcs, cloud, rx, i, u_diag.row(0).transpose());
    detail::scatter_u(trips, F, sys, bcs, cloud, ry, i, u_diag.row(1).transpose());
    trips.emplace_back(rx, rth, th_diag.x());
    trips.emplace_back(ry, rth, th_diag.y());

    if (opts.mass_factor != 0.0) {
      const double mass = opts.mass_factor * material.at(i).rho;
      trips.emplace_back(rx, rx, mass);
      trips.emplace_back(ry, ry, mass);
    }

    // Tractions act on points inside the static Neumann band; fracture-created
    // faces elsewhere stay free.
    if (corrected && cloud.dist_n[i] < cloud.delta && frames[i].valid) {
      sys.traction_coeff[i] = traction_coeffs(ctx, i);
      sys.traction_active[i] = 1;
    }
  }

  sys.K.resize(nrows, nrows);
  sys.K.setFromTriplets(trips.begin(), trips.end());
  sys.F_geom = std::move(F);
  return sys;
}

// Load vector (body force + traction forcing) at a given time.
inline Eigen::VectorXd assemble_loads(const LpsSystem& sys, const PointCloud& cloud,
                                      const BoundaryConditions& bcs, double t) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(sys.rows());
  for (Index i = 0; i < cloud.size(); ++i) {
    if (sys.u_index[i] < 0) continue;
    Vec2 f = bcs.body ? bcs.body(cloud.positions[i], t) : Vec2::Zero();
    if (bcs.traction && sys.traction_active[i]) {
      const Frame& fr = sys.frames[i];
      const Vec2 T = bcs.traction(fr.xbar, fr.n, t);
      f += sys.traction_coeff[i].s_p * T.dot(fr.p) * fr.p +
           sys.traction_coeff[i].s_n * T.dot(fr.n) * fr.n;
    }
    F(sys.row_ux(i)) += f.x();
    F(sys.row_uy(i)) += f.y();
  }
  return F;
}

// ---------------------------------------------------------------------------
// Sparse direct solve
// ---------------------------------------------------------------------------

class SparseSolver {
 public:
  void factorize(const Eigen::SparseMatrix<double>& K) {
    lu_.compute(K);
    if (lu_.info() != Eigen::Success)
      throw SolveFailed(
          "sparse LU factorization failed (suspect isolated points or an all-Neumann problem "
          "with un-constrained rigid modes)");
  }
  Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& F) const {
    Eigen::VectorXd eta = lu_.solve(F);
    const double fn = F.norm();
    const double res = (K * eta - F).norm();
    if (fn > 0 && !(res <= 1e-10 * fn))
      throw SolveFailed("relative residual " + std::to_string(res / fn) + " exceeds 1e-10");
    return eta;
  }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

struct StaticSolution {
  std::vector<Vec2> u;          // displacement on every point (collar filled with u_D)
  std::vector<double> theta;    // dilatation where tracked, else 0
  std::vector<std::uint8_t> has_u;
};

inline StaticSolution extract_solution(const Eigen::VectorXd& eta, const LpsSystem& sys,
                                       const PointCloud& cloud, const BoundaryConditions& bcs) {
  StaticSolution out;
  const Index n = cloud.size();
  out.u.assign(n, Vec2::Zero());
  out.theta.assign(n, 0.0);
  out.has_u.assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    if (sys.u_index[i] >= 0) {
      out.u[i] = Vec2(eta(sys.row_ux(i)), eta(sys.row_uy(i)));
      out.has_u[i] = 1;
    } else if (cloud.region[i] == Region::DirichletCollar && bcs.dirichlet) {
      out.u[i] = bcs.dirichlet(cloud.positions[i]);
      out.has_u[i] = 1;
    }
    if (sys.th_index[i] >= 0) out.theta[i] = eta(sys.row_th(i));
  }
  return out;
}

inline StaticSolution solve_static(const PointCloud& cloud, const QuadratureRule& rule,
                                   const Mask& gamma, const KernelSpec& kernel,
                                   const MaterialField& material, const std::vector<Frame>& frames,
                                   const BoundaryConditions& bcs) {
  LpsSystem sys = assemble(cloud, rule, gamma, kernel, material, frames, bcs);
  const Eigen::VectorXd F = sys.F_geom + assemble_loads(sys, cloud, bcs, 0.0);
  SparseSolver solver;
  solver.factorize(sys.K);
  const Eigen::VectorXd eta = solver.solve(sys.K, F);
  return extract_solution(eta, sys, cloud, bcs);
}

// ---------------------------------------------------------------------------
// Discrete error norms
// ---------------------------------------------------------------------------

// sqrt( sum_{i in Omega} cell_i |num_i - exact(x_i)|^2 )
inline double l2_error(const PointCloud& cloud, const std::vector<Vec2>& num,
                       const std::function<Vec2(const Vec2&)>& exact) {
  double acc = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!cloud.in_omega(i)) continue;
    acc += cloud.cell_measure[i] * (num[i] - exact(cloud.positions[i])).squaredNorm();
  }
  return std::sqrt(acc);
}

inline double l2_error_scalar(const PointCloud& cloud, const std::vector<double>& num,
                              const std::function<double(const Vec2&)>& exact) {
  double acc = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!cloud.in_omega(i)) continue;
    const double d = num[i] - exact(cloud.positions[i]);
    acc += cloud.cell_measure[i] * d * d;
  }
  return std::sqrt(acc);
}

struct ConvergenceRow {
  double h = 0;
  double delta = 0;
  double err_u = 0;
  double err_theta = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope_u = 0;
  double slope_theta = 0;

  void fit() {
    std::vector<double> hs, eu, et;
    for (const auto& r : rows) {
      hs.push_back(r.h);
      eu.push_back(r.err_u);
      et.push_back(r.err_theta);
    }
    slope_u = fit_rate(hs, eu);
    slope_theta = fit_rate(hs, et);
  }
};

}  // namespace perilps
