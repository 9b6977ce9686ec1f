#pragma once

#include "perilps/lps.hpp"

namespace perilps {

// Closed-form local solutions backing the verification benchmarks. Each
// exposes the displacement, its divergence, and where needed the Cauchy
// stress so traction loads can be written as sigma(x) * n.

// u = (3x + 2y, -x + 2y): stress is constant, forcing zero.
struct PatchSolution {
  Material mat;

  Vec2 u(const Vec2& x) const { return Vec2(3 * x.x() + 2 * x.y(), -x.x() + 2 * x.y()); }
  double div_u(const Vec2&) const { return 5.0; }
  Mat2 stress(const Vec2&) const {
    Mat2 s;
    s << 5 * mat.lambda + 6 * mat.mu, mat.mu, mat.mu, 5 * mat.lambda + 4 * mat.mu;
    return s;
  }
  Vec2 body(const Vec2&) const { return Vec2::Zero(); }
};

// u = (sin(Ax)sin(Ay), -cos(Ax)cos(Ay)) with matching body load.
struct ManufacturedSolution {
  Material mat;
  double A = 0.4;

  Vec2 u(const Vec2& x) const {
    return Vec2(std::sin(A * x.x()) * std::sin(A * x.y()),
                -std::cos(A * x.x()) * std::cos(A * x.y()));
  }
  double div_u(const Vec2& x) const { return 2 * A * std::cos(A * x.x()) * std::sin(A * x.y()); }
  Mat2 stress(const Vec2& x) const {
    const double diag = 2 * A * (mat.lambda + mat.mu) * std::cos(A * x.x()) * std::sin(A * x.y());
    const double off = 2 * A * mat.mu * std::sin(A * x.x()) * std::cos(A * x.y());
    Mat2 s;
    s << diag, off, off, diag;
    return s;
  }
  Vec2 body(const Vec2& x) const {
    const double c = 2 * (mat.lambda + 2 * mat.mu) * A * A;
    return Vec2(c * std::sin(A * x.x()) * std::sin(A * x.y()),
                -c * std::cos(A * x.x()) * std::cos(A * x.y()));
  }
};

// Free circular hole of radius a in an infinite plate under remote uniaxial
// stress sigma0 (plane strain); the hole surface is traction-free.
struct HoleSolution {
  Material mat;
  double sigma0 = 1.0;
  double a = 0.2;

  Vec2 u(const Vec2& x) const {
    const double r = x.norm();
    const double th = std::atan2(x.y(), x.x());
    const double kappa = 3.0 - 4.0 * nu();
    const double c = sigma0 * a / (8.0 * mat.mu);
    const double ux = c * ((r / a) * (kappa + 1) * std::cos(th) +
                           (2 * a / r) * ((1 + kappa) * std::cos(th) + std::cos(3 * th)) -
                           (2 * a * a * a / (r * r * r)) * std::cos(3 * th));
    const double uy = c * ((r / a) * (kappa - 3) * std::sin(th) +
                           (2 * a / r) * ((1 - kappa) * std::sin(th) + std::sin(3 * th)) -
                           (2 * a * a * a / (r * r * r)) * std::sin(3 * th));
    return Vec2(ux, uy);
  }
  // tr(sigma_2d) = sigma0 (1 - 2 a^2/r^2 cos 2th); plane strain gives
  // div u = tr(sigma_2d) / (2 (lambda + mu)).
  double div_u(const Vec2& x) const {
    const double r2 = x.squaredNorm();
    const double cos2t = (x.x() * x.x() - x.y() * x.y()) / r2;
    return sigma0 * (1.0 - 2.0 * a * a / r2 * cos2t) / (2.0 * (mat.lambda + mat.mu));
  }
  Vec2 body(const Vec2&) const { return Vec2::Zero(); }

 private:
  double nu() const { return mat.lambda / (2.0 * (mat.lambda + mat.mu)); }
};

// Hollow cylinder R0 < r < R1 under internal pressure p0 (plane strain).
struct DiskSolution {
  double p0 = 0.1;
  double R0 = 1.0;
  double R1 = 1.5;
  double E = 1.0;
  double nu = 0.3;

  double A() const { return (1 + nu) * (1 - 2 * nu) * p0 * R0 * R0 / (E * (R1 * R1 - R0 * R0)); }
  double B() const { return (1 + nu) * p0 * R0 * R0 * R1 * R1 / (E * (R1 * R1 - R0 * R0)); }

  Vec2 u(const Vec2& x) const { return A() * x + B() * x / x.squaredNorm(); }
  double div_u(const Vec2&) const { return 2.0 * A(); }
  // Traction on the inner surface, consistent with sigma_rr(R0) = -p0.
  Vec2 inner_traction(const Vec2& xbar) const { return p0 * xbar.normalized(); }
  Vec2 body(const Vec2&) const { return Vec2::Zero(); }
};

// Hydrostatically loaded cylindrical inclusion of radius a (phase 1 inside,
// phase 2 outside) under far-field stress P_inf.
struct InclusionSolution {
  Material mat1, mat2;
  double P_inf = 1.0;
  double a = 0.2;

  double C_A() const { return P_inf / (2 * (mat1.lambda + mat1.mu)); }
  double C_B() const {
    return P_inf * (mat1.lambda + mat1.mu + mat2.mu) /
           (2 * (mat1.lambda + mat1.mu) * (mat2.lambda + 2 * mat2.mu));
  }
  double C_C() const {
    return -P_inf * a * a * (mat1.lambda - mat2.lambda + mat1.mu - mat2.mu) /
           (2 * (mat1.lambda + mat1.mu) * (mat2.lambda + 2 * mat2.mu));
  }

  double u_r(double r) const { return r < a ? C_A() * r : C_B() * r + C_C() / r; }
  Vec2 u(const Vec2& x) const {
    const double r = x.norm();
    if (r < 1e-15) return Vec2::Zero();
    return u_r(r) * x / r;
  }
  double div_u(const Vec2& x) const { return x.norm() < a ? 2 * C_A() : 2 * C_B(); }
  Material material_at(const Vec2& x) const { return x.norm() < a ? mat1 : mat2; }
};

}  // namespace perilps
