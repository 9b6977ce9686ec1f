#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace perilps {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Index = std::int64_t;

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct NonIntegrable : std::runtime_error {
  explicit NonIntegrable(const std::string& msg) : std::runtime_error("non-integrable moment: " + msg) {}
};

struct WeightsSingular : std::runtime_error {
  Index point;
  explicit WeightsSingular(Index i, const std::string& msg)
      : std::runtime_error("quadrature weights singular at point " + std::to_string(i) + ": " + msg),
        point(i) {}
};

struct FrameDegenerate : std::runtime_error {
  Index point;
  explicit FrameDegenerate(Index i)
      : std::runtime_error("degenerate boundary frame at point " + std::to_string(i)), point(i) {}
};

struct SolveFailed : std::runtime_error {
  explicit SolveFailed(const std::string& msg) : std::runtime_error("linear solve failed: " + msg) {}
};

struct SubiterationDiverged : std::runtime_error {
  Index step;
  explicit SubiterationDiverged(Index n)
      : std::runtime_error("fracture subiteration cap exceeded at step " + std::to_string(n)), step(n) {}
};

struct CriterionInvalid : std::runtime_error {
  explicit CriterionInvalid(const std::string& msg) : std::runtime_error("fracture criterion invalid: " + msg) {}
};

struct AssemblyError : std::runtime_error {
  explicit AssemblyError(const std::string& msg) : std::runtime_error("assembly error: " + msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64); positions must be bit-reproducible across
// runs for a given seed, so we do not rely on <random> distributions.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::int64_t a, std::int64_t b) {
  std::uint64_t s = seed ^ (static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ull) ^
                    (static_cast<std::uint64_t>(b) * 0xC2B2AE3D27D4EB4Full);
  return splitmix64(s);
}

// Uniform double in [0, 1).
inline double u01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double d = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / d;
}

// Fitted log-log convergence rate of err against h.
inline double fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
  std::vector<double> lx(h.size()), ly(err.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    lx[i] = std::log(h[i]);
    ly[i] = std::log(err[i]);
  }
  return ls_slope(lx, ly);
}

inline double harmonic_mean(double a, double b) {
  const double s = a + b;
  if (s == 0.0) return 0.0;
  return 2.0 * a * b / s;
}

}  // namespace perilps
