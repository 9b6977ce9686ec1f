#pragma once

#include "perilps/frames.hpp"

#include <Eigen/Eigenvalues>

namespace perilps {

// ---------------------------------------------------------------------------
// Kernel and material data
// ---------------------------------------------------------------------------

// Scaled kernel K(r) = 1/r on the delta-ball, with its closed-form weighted
// volume m = 2*pi*delta^3/3 and the 2D LPS scaling constants.
struct KernelSpec {
  double delta = 0;
  double m = 0;
  static constexpr int d = 2;
  static constexpr double C_alpha = 2.0;
  static constexpr double C_beta = 16.0;

  static KernelSpec make(double delta) {
    KernelSpec k;
    k.delta = delta;
    k.m = 2.0 * kPi * delta * delta * delta / 3.0;
    return k;
  }
  double K(double r) const { return 1.0 / r; }
};

struct Material {
  double lambda = 0;
  double mu = 0;
  double rho = 0;
  double G0 = 0;

  static Material plane_strain(double E, double nu, double rho = 0, double G0 = 0) {
    Material m;
    m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    m.mu = E / (2.0 * (1.0 + nu));
    m.rho = rho;
    m.G0 = G0;
    if (!(m.mu > 0) || !(m.lambda + m.mu > 0)) throw ConfigError("non-elliptic material parameters");
    return m;
  }

  // 2D plane-stress reduction: same mu, effective lambda.
  static Material plane_stress(double E, double nu, double rho = 0, double G0 = 0) {
    Material m = plane_strain(E, nu, rho, G0);
    m.lambda = 2.0 * m.lambda * m.mu / (m.lambda + 2.0 * m.mu);
    return m;
  }
};

// Per-point material with two-point harmonic averaging for composites.
struct MaterialField {
  std::vector<Material> mat;

  static MaterialField homogeneous(const Material& m, Index n) {
    MaterialField f;
    f.mat.assign(static_cast<std::size_t>(n), m);
    return f;
  }
  static MaterialField from_function(const PointCloud& cloud,
                                     const std::function<Material(const Vec2&)>& fn) {
    MaterialField f;
    f.mat.reserve(cloud.size());
    for (Index i = 0; i < cloud.size(); ++i) f.mat.push_back(fn(cloud.positions[i]));
    return f;
  }

  const Material& at(Index i) const { return mat[i]; }
  double lambda_pair(Index i, Index j) const { return harmonic_mean(mat[i].lambda, mat[j].lambda); }
  double mu_pair(Index i, Index j) const { return harmonic_mean(mat[i].mu, mat[j].mu); }
};

// ---------------------------------------------------------------------------
// Correction tensor
// ---------------------------------------------------------------------------

struct CorrectionTensor {
  Mat2 M = Mat2::Identity();
  bool pseudo_inverse_used = false;
};

inline constexpr double kCorrectionCondLimit = 1e12;

// M_i = [ (d/m) sum K xi (x) xi w~ ]^-1 over intact bonds, with a
// pseudo-inverse once the moment matrix degenerates (isolated particles).
inline CorrectionTensor correction_tensor(const PointCloud& cloud, const QuadratureRule& rule,
                                          const Mask& gamma, const KernelSpec& kernel, Index i) {
  Mat2 A = Mat2::Zero();
  const Vec2& xi = cloud.positions[i];
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
    if (!gamma[k]) continue;
    const Vec2 bond = cloud.positions[cloud.nbr[k]] - xi;
    const double r = bond.norm();
    A += (kernel.K(r) * rule.w[k]) * (bond * bond.transpose());
  }
  A *= static_cast<double>(KernelSpec::d) / kernel.m;

  Eigen::SelfAdjointEigenSolver<Mat2> es(A);
  const double emin = es.eigenvalues()(0);
  const double emax = es.eigenvalues()(1);
  CorrectionTensor out;
  if (emax <= 0.0) {
    out.M = Mat2::Zero();
    out.pseudo_inverse_used = true;
    return out;
  }
  if (!(emin > emax / kCorrectionCondLimit)) {
    // truncated pseudo-inverse on the eigenbasis
    const Vec2 inv(0.0, 1.0 / emax);
    out.M = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    out.pseudo_inverse_used = true;
    return out;
  }
  out.M = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Operator rows
//
// One code path produces the coefficients of both the interior operator and
// the Neumann-corrected operator: for a point without broken bonds the broken
// sums are empty and the row reduces to the plain five-point form. Row
// callbacks let apply_* and the matrix assembly share the formulas.
// ---------------------------------------------------------------------------

struct OpCtx {
  const PointCloud& cloud;
  const QuadratureRule& rule;
  const Mask& gamma;
  const KernelSpec& kernel;
  const MaterialField& material;
  const std::vector<Frame>* frames = nullptr;  // needed only where bonds are broken
};

// Momentum-row coefficients at point i:
//   pair_u(j, A):  A (2x2) multiplies (u_j - u_i)
//   pair_th(j, b): b (2-vector) multiplies (theta_i + theta_j)
//   self_th(c):    c (2-vector) multiplies theta_i (broken-bond correction)
template <class PU, class PT, class ST>
inline void momentum_terms(const OpCtx& ctx, Index i, PU&& pair_u, PT&& pair_th, ST&& self_th) {
  const auto& cloud = ctx.cloud;
  const Vec2& xi = cloud.positions[i];
  const double m = ctx.kernel.m;
  const bool corrected = has_broken_bond(cloud, ctx.gamma, i);
  const Frame* frame = nullptr;
  if (corrected && ctx.frames && (*ctx.frames)[i].valid) frame = &(*ctx.frames)[i];

  Vec2 self = Vec2::Zero();
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
    const Index j = cloud.nbr[k];
    const Vec2 bond = cloud.positions[j] - xi;
    const double r2 = bond.squaredNorm();
    const double r = std::sqrt(r2);
    const double Kij = ctx.kernel.K(r);
    const double wt = ctx.rule.w[k];
    if (ctx.gamma[k]) {
      const double lam = ctx.material.lambda_pair(i, j);
      const double mu = ctx.material.mu_pair(i, j);
      const Mat2 A = (-KernelSpec::C_beta * mu * Kij * wt / (m * r2)) * (bond * bond.transpose());
      pair_u(j, A);
      const Vec2 b = (-KernelSpec::C_alpha * (lam - mu) * Kij * wt / m) * bond;
      pair_th(j, b);
    } else if (frame) {
      const double lam = ctx.material.at(i).lambda;
      const double mu = ctx.material.at(i).mu;
      const double xn = bond.dot(frame->n);
      const double xp = bond.dot(frame->p);
      Vec2 c = -2.0 * KernelSpec::C_alpha * (lam - mu) * bond;
      c -= (0.5 * KernelSpec::C_beta * (lam + 2.0 * mu) * xn * xp * xp / r2) * frame->n;
      c += (0.5 * KernelSpec::C_beta * lam * xn * xn * xn / r2) * frame->n;
      self += (Kij * wt / m) * c;
    }
  }
  self_th(self);
}

// Traction coefficients at point i: the forcing contribution is
//   s_p * T_p(xbar_i) * p_i + s_n * T_n(xbar_i) * n_i.
struct TractionCoeff {
  double s_p = 0;
  double s_n = 0;
};

inline TractionCoeff traction_coeffs(const OpCtx& ctx, Index i) {
  TractionCoeff out;
  if (!ctx.frames || !(*ctx.frames)[i].valid) return out;
  const Frame& f = (*ctx.frames)[i];
  const auto& cloud = ctx.cloud;
  const Vec2& xi = cloud.positions[i];
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
    if (ctx.gamma[k]) continue;
    const Vec2 bond = cloud.positions[cloud.nbr[k]] - xi;
    const double r2 = bond.squaredNorm();
    const double Kw = ctx.kernel.K(std::sqrt(r2)) * ctx.rule.w[k] / ctx.kernel.m;
    const double xn = bond.dot(f.n);
    const double xp = bond.dot(f.p);
    out.s_p += Kw * KernelSpec::C_beta * xn * xp * xp / r2;
    out.s_n += Kw * 0.5 * KernelSpec::C_beta * xn * (xn * xn - xp * xp) / r2;
  }
  return out;
}

// Dilatation-row coefficients: theta_i = sum_j e_j . (u_j - u_i). The
// corrected form applies M_i and intact weights; the plain form is the
// unmasked full-ball sum.
template <class F>
inline void dilatation_terms(const OpCtx& ctx, Index i, bool corrected, F&& coeff) {
  const auto& cloud = ctx.cloud;
  const Vec2& xi = cloud.positions[i];
  const double scale = static_cast<double>(KernelSpec::d) / ctx.kernel.m;
  Mat2 M = Mat2::Identity();
  if (corrected) M = correction_tensor(cloud, ctx.rule, ctx.gamma, ctx.kernel, i).M;
  for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
    if (corrected && !ctx.gamma[k]) continue;
    const Index j = cloud.nbr[k];
    const Vec2 bond = cloud.positions[j] - xi;
    const double Kij = ctx.kernel.K(bond.norm());
    const Vec2 e = scale * Kij * ctx.rule.w[k] * (M * bond);
    coeff(j, e);
  }
}

// ---------------------------------------------------------------------------
// Point-wise evaluations (the testable operator surface)
// ---------------------------------------------------------------------------

inline double dilatation_at(const OpCtx& ctx, Index i, const std::vector<Vec2>& u, bool corrected) {
  double th = 0;
  dilatation_terms(ctx, i, corrected, [&](Index j, const Vec2& e) { th += e.dot(u[j] - u[i]); });
  return th;
}

// Plain dilatation field over the unmasked full ball.
inline std::vector<double> dilatation(const PointCloud& cloud, const QuadratureRule& rule,
                                      const KernelSpec& kernel, const std::vector<Vec2>& u) {
  Mask all(cloud.nbr.size(), 1);
  MaterialField dummy = MaterialField::homogeneous(Material{1, 1, 0, 0}, cloud.size());
  OpCtx ctx{cloud, rule, all, kernel, dummy, nullptr};
  std::vector<double> th(cloud.size(), 0.0);
  for (Index i = 0; i < cloud.size(); ++i)
    if (rule.has_rule[i]) th[i] = dilatation_at(ctx, i, u, false);
  return th;
}

inline double corrected_dilatation_at(const PointCloud& cloud, const QuadratureRule& rule,
                                      const Mask& gamma, const KernelSpec& kernel, Index i,
                                      const std::vector<Vec2>& u) {
  MaterialField dummy = MaterialField::homogeneous(Material{1, 1, 0, 0}, cloud.size());
  OpCtx ctx{cloud, rule, gamma, kernel, dummy, nullptr};
  return dilatation_at(ctx, i, u, true);
}

// Momentum operator value at point i given consistent (u, theta); covers both
// the interior operator and the Neumann-corrected operator.
inline Vec2 apply_operator_at(const OpCtx& ctx, Index i, const std::vector<Vec2>& u,
                              const std::vector<double>& theta) {
  Vec2 out = Vec2::Zero();
  momentum_terms(
      ctx, i, [&](Index j, const Mat2& A) { out += A * (u[j] - u[i]); },
      [&](Index j, const Vec2& b) { out += b * (theta[i] + theta[j]); },
      [&](const Vec2& c) { out += c * theta[i]; });
  return out;
}

// Traction-corrected forcing f_Ndelta at point i. The traction callback
// receives the evaluation point xbar and the frame normal.
inline Vec2 traction_forcing_at(const OpCtx& ctx, Index i,
                                const std::function<Vec2(const Vec2&, const Vec2&)>& traction,
                                const std::function<Vec2(const Vec2&)>& body) {
  Vec2 f = body ? body(ctx.cloud.positions[i]) : Vec2::Zero();
  if (!traction || !ctx.frames || !(*ctx.frames)[i].valid) return f;
  const Frame& fr = (*ctx.frames)[i];
  const TractionCoeff tc = traction_coeffs(ctx, i);
  const Vec2 T = traction(fr.xbar, fr.n);
  f += tc.s_p * T.dot(fr.p) * fr.p + tc.s_n * T.dot(fr.n) * fr.n;
  return f;
}

// ---------------------------------------------------------------------------
// Local (classical) operator oracle
//
// Finite-difference evaluation of -(lambda+mu) grad(div u) - mu lap(u) for a
// smooth displacement field; used only by verification tests to cross-check
// nonlocal operators against their local limit.
// ---------------------------------------------------------------------------

inline Vec2 local_operator_oracle(const std::function<Vec2(const Vec2&)>& u, const Material& mat,
                                  const Vec2& x, double step = 2e-3) {
  auto second = [&](int comp, int a, int b) {
    // d^2 u_comp / dx_a dx_b, fourth-order central differences
    auto f = [&](double s, double t) {
      Vec2 y = x;
      y(a) += s;
      if (a == b)
        y(a) += t;
      else
        y(b) += t;
      return u(y)(comp);
    };
    if (a == b) {
      return (-f(2 * step, 0) + 16 * f(step, 0) - 30 * f(0, 0) + 16 * f(-step, 0) -
              f(-2 * step, 0)) /
             (12 * step * step);
    }
    double acc = 0;
    const double c[2] = {8.0, -1.0};
    for (int ii = 1; ii <= 2; ++ii)
      for (int jj = 1; jj <= 2; ++jj) {
        const double w = c[ii - 1] * c[jj - 1];
        acc += w * (f(ii * step, jj * step) - f(ii * step, -jj * step) -
                    f(-ii * step, jj * step) + f(-ii * step, -jj * step));
      }
    return acc / (144.0 * step * step);
  };
  Vec2 out;
  for (int comp = 0; comp < 2; ++comp) {
    const double lap = second(comp, 0, 0) + second(comp, 1, 1);
    // grad(div u)_comp = sum_k d^2 u_k / dx_k dx_comp
    const double gdiv = second(0, 0, comp) + second(1, 1, comp);
    out(comp) = -(mat.lambda + mat.mu) * gdiv - mat.mu * lap;
  }
  return out;
}

}  // namespace perilps
