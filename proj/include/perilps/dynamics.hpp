#pragma once

#include "perilps/static_solver.hpp"

#include <numeric>

namespace perilps {

// ---------------------------------------------------------------------------
// Bond strain and the critical-stretch criterion
// ---------------------------------------------------------------------------

inline double bond_strain(const Vec2& xi, const Vec2& xj, const Vec2& ui, const Vec2& uj) {
  const double ref = (xj - xi).norm();
  return ((uj - ui + xj - xi).norm() - ref) / ref;
}

struct FractureCriterion {
  double s0 = std::numeric_limits<double>::infinity();

  // s0 = sqrt( G0 / (4 (lambda - mu) beta' + 8 mu beta) ),
  // beta = 3 delta / (4 pi), beta' = 0.23873 delta.
  static FractureCriterion from_material(const Material& mat, double delta) {
    const double beta = 3.0 * delta / (4.0 * kPi);
    const double beta_p = 0.23873 * delta;
    const double denom = 4.0 * (mat.lambda - mat.mu) * beta_p + 8.0 * mat.mu * beta;
    if (!(denom > 0)) throw CriterionInvalid("non-positive radicand in critical stretch");
    FractureCriterion c;
    c.s0 = std::sqrt(mat.G0 / denom);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Time-dependent state
// ---------------------------------------------------------------------------

struct FractureState {
  Mask gamma;             // current bond state; monotone non-increasing per bond
  std::vector<Vec2> u, v, a;
  double t = 0;
  Index step = 0;

  static FractureState zero(const PointCloud& cloud, Mask initial_mask) {
    FractureState s;
    s.gamma = std::move(initial_mask);
    s.u.assign(cloud.size(), Vec2::Zero());
    s.v.assign(cloud.size(), Vec2::Zero());
    s.a.assign(cloud.size(), Vec2::Zero());
    return s;
  }
};

// Damage phi_i: broken fraction of the reference neighbor list.
inline std::vector<double> damage_field(const PointCloud& cloud, const Mask& gamma) {
  std::vector<double> phi(cloud.size(), 0.0);
  for (Index i = 0; i < cloud.size(); ++i) {
    const Index deg = cloud.degree(i);
    if (deg == 0) continue;
    Index broken = 0;
    for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) broken += gamma[k] ? 0 : 1;
    phi[i] = static_cast<double>(broken) / static_cast<double>(deg);
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Implicit Newmark (average acceleration) with fracture subiterations
// ---------------------------------------------------------------------------

struct DynamicsConfig {
  double dt = 0;
  FractureCriterion criterion;  // default: no breaking
  NormalMode normals = NormalMode::Estimated;
  int max_subiterations = 50;
};

class NewmarkSolver {
 public:
  NewmarkSolver(const PointCloud& cloud, const QuadratureRule& rule, const KernelSpec& kernel,
                const MaterialField& material, const Domain& domain, BoundaryConditions bcs,
                DynamicsConfig cfg)
      : cloud_(cloud),
        rule_(rule),
        kernel_(kernel),
        material_(material),
        domain_(domain),
        bcs_(std::move(bcs)),
        cfg_(cfg) {
    if (!(cfg_.dt > 0)) throw ConfigError("time step must be positive");
    reverse_bond_ = build_reverse(cloud);
  }

  // One implicit step with the bond-breaking subiteration loop: solve, break
  // every over-strained bond, rebuild the split weights and correction
  // tensors, re-solve; commit the kinematic updates once no bond breaks.
  void step(FractureState& state) {
    const double dt = cfg_.dt;
    const double t_next = state.t + dt;
    const double mass_factor = 4.0 / (dt * dt);
    solves_last_step_ = 0;

    std::vector<Vec2> u_next;
    for (int iter = 0;; ++iter) {
      if (iter >= cfg_.max_subiterations) throw SubiterationDiverged(state.step);
      if (!system_) rebuild(state.gamma, mass_factor);

      Eigen::VectorXd F = system_->F_geom + assemble_loads(*system_, cloud_, bcs_, t_next);
      for (Index i = 0; i < cloud_.size(); ++i) {
        if (system_->u_index[i] < 0) continue;
        const double m = mass_factor * material_.at(i).rho;
        const Vec2 hist =
            m * (state.u[i] + dt * state.v[i] + 0.25 * dt * dt * state.a[i]);
        F(system_->row_ux(i)) += hist.x();
        F(system_->row_uy(i)) += hist.y();
      }
      const Eigen::VectorXd eta = solver_.solve(system_->K, F);
      ++solves_last_step_;
      ++total_solves_;

      u_next = state.u;
      for (Index i = 0; i < cloud_.size(); ++i)
        if (system_->u_index[i] >= 0)
          u_next[i] = Vec2(eta(system_->row_ux(i)), eta(system_->row_uy(i)));

      if (!break_over_threshold(state.gamma, u_next)) break;
      system_.reset();  // weights are fixed; only the mask and frames change
    }

    for (Index i = 0; i < cloud_.size(); ++i) {
      const Vec2 a_new =
          mass_factor * (u_next[i] - state.u[i] - dt * state.v[i]) - state.a[i];
      state.v[i] += 0.5 * dt * (state.a[i] + a_new);
      state.a[i] = a_new;
      state.u[i] = u_next[i];
    }
    state.t = t_next;
    ++state.step;
  }

  int solves_last_step() const { return solves_last_step_; }
  Index total_solves() const { return total_solves_; }
  const LpsSystem* system() const { return system_ ? system_.get() : nullptr; }

 private:
  static std::vector<Index> build_reverse(const PointCloud& cloud) {
    std::vector<Index> rev(cloud.nbr.size(), -1);
    for (Index i = 0; i < cloud.size(); ++i) {
      for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
        const Index j = cloud.nbr[k];
        const auto lo = cloud.nbr.begin() + cloud.nbr_begin(j);
        const auto hi = cloud.nbr.begin() + cloud.nbr_end(j);
        const auto it = std::lower_bound(lo, hi, i);
        rev[k] = cloud.nbr_begin(j) + (it - lo);
      }
    }
    return rev;
  }

  void rebuild(const Mask& gamma, double mass_factor) {
    frames_ = build_frames(cloud_, rule_, gamma, domain_, cfg_.normals, &frames_prev_);
    frames_prev_ = frames_;
    AssemblyOptions opts;
    opts.mass_factor = mass_factor;
    system_ = std::make_unique<LpsSystem>(
        assemble(cloud_, rule_, gamma, kernel_, material_, frames_, bcs_, opts));
    solver_.factorize(system_->K);
  }

  // Break all bonds whose strain exceeds s0, simultaneously and symmetrically.
  bool break_over_threshold(Mask& gamma, const std::vector<Vec2>& u) {
    const double s0 = cfg_.criterion.s0;
    if (!std::isfinite(s0)) return false;
    bool any = false;
    for (Index i = 0; i < cloud_.size(); ++i) {
      if (!cloud_.in_omega(i)) continue;
      for (Index k = cloud_.nbr_begin(i); k < cloud_.nbr_end(i); ++k) {
        const Index j = cloud_.nbr[k];
        if (j < i || !gamma[k] || !cloud_.in_omega(j)) continue;
        const double s = bond_strain(cloud_.positions[i], cloud_.positions[j], u[i], u[j]);
        if (s > s0) {
          gamma[k] = 0;
          gamma[reverse_bond_[k]] = 0;
          any = true;
        }
      }
    }
    return any;
  }

  const PointCloud& cloud_;
  const QuadratureRule& rule_;
  const KernelSpec& kernel_;
  const MaterialField& material_;
  const Domain& domain_;
  BoundaryConditions bcs_;
  DynamicsConfig cfg_;

  std::vector<Index> reverse_bond_;
  std::vector<Frame> frames_, frames_prev_;
  std::unique_ptr<LpsSystem> system_;
  SparseSolver solver_;
  int solves_last_step_ = 0;
  Index total_solves_ = 0;
};

// ---------------------------------------------------------------------------
// Crack feature extraction
// ---------------------------------------------------------------------------

struct DamageSnapshot {
  double t = 0;
  std::vector<double> phi;
};

struct CrackFeatures {
  bool branched = false;
  double branch_time = 0;
  Vec2 branch_point{0, 0};
  double branch_angle_deg = 0;
  std::vector<double> tip_time;
  std::vector<double> tip_x;
  std::vector<double> tip_speed;  // central differences of tip_x
  double max_speed = 0;
};

inline constexpr double kCrackDamageThreshold = 0.35;

namespace detail {

// Connected components among the selected points, 8-neighbor adjacency on the
// generating lattice.
inline std::vector<int> lattice_components(const PointCloud& cloud, const std::vector<Index>& pts) {
  std::unordered_map<std::uint64_t, int> where;
  auto key = [](std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a + (1 << 20)) << 32) |
           static_cast<std::uint64_t>(b + (1 << 20));
  };
  for (std::size_t s = 0; s < pts.size(); ++s)
    where[key(cloud.lattice[pts[s]].first, cloud.lattice[pts[s]].second)] = static_cast<int>(s);
  std::vector<int> comp(pts.size(), -1);
  int ncomp = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = ncomp;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const auto [ci, cj] = cloud.lattice[pts[cur]];
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          auto it = where.find(key(ci + di, cj + dj));
          if (it == where.end() || comp[it->second] >= 0) continue;
          comp[it->second] = ncomp;
          stack.push_back(it->second);
        }
    }
    ++ncomp;
  }
  return comp;
}

}  // namespace detail

// Tip tracking, branch detection in a strip ahead of the previous tip, and the
// branch angle from least-squares lines over the 20 subsequent tip positions.
inline CrackFeatures extract_crack_features(const PointCloud& cloud,
                                            const std::vector<DamageSnapshot>& snaps,
                                            double threshold = kCrackDamageThreshold) {
  CrackFeatures out;
  const double h = cloud.h;

  auto damaged_points = [&](const DamageSnapshot& s) {
    std::vector<Index> pts;
    for (Index i = 0; i < cloud.size(); ++i)
      if (cloud.in_omega(i) && s.phi[i] > threshold) pts.push_back(i);
    return pts;
  };
  auto tip_of = [&](const std::vector<Index>& pts) -> Index {
    Index best = -1;
    for (Index i : pts)
      if (best < 0 || cloud.positions[i].x() > cloud.positions[best].x()) best = i;
    return best;
  };

  std::vector<Index> prev_tip(snaps.size(), -1);
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    const auto pts = damaged_points(snaps[s]);
    const Index tip = tip_of(pts);
    prev_tip[s] = tip;
    out.tip_time.push_back(snaps[s].t);
    out.tip_x.push_back(tip >= 0 ? cloud.positions[tip].x()
                                 : std::numeric_limits<double>::quiet_NaN());
  }

  // speeds by central differences
  out.tip_speed.assign(snaps.size(), 0.0);
  for (std::size_t s = 1; s + 1 < snaps.size(); ++s) {
    if (!std::isfinite(out.tip_x[s - 1]) || !std::isfinite(out.tip_x[s + 1])) continue;
    out.tip_speed[s] = (out.tip_x[s + 1] - out.tip_x[s - 1]) / (out.tip_time[s + 1] - out.tip_time[s - 1]);
    out.max_speed = std::max(out.max_speed, out.tip_speed[s]);
  }

  // branch detection
  std::size_t branch_snap = 0;
  for (std::size_t s = 1; s < snaps.size() && !out.branched; ++s) {
    if (prev_tip[s - 1] < 0) continue;
    const double x0 = cloud.positions[prev_tip[s - 1]].x();
    const auto pts = damaged_points(snaps[s]);
    std::vector<Index> strip;
    for (Index i : pts)
      if (cloud.positions[i].x() > x0 - 2 * h) strip.push_back(i);
    if (strip.size() < 4) continue;
    const auto comp = detail::lattice_components(cloud, strip);
    std::unordered_map<int, int> csize;
    for (int c : comp) ++csize[c];
    int big = 0;
    for (const auto& [c, n] : csize)
      if (n >= 2) ++big;
    if (big >= 2) {
      out.branched = true;
      out.branch_time = snaps[s].t;
      out.branch_point = cloud.positions[prev_tip[s - 1]];
      branch_snap = s;
    }
  }
  if (!out.branched) return out;

  // branch angle: fit a line to each branch tip trace over the following snapshots
  std::vector<Vec2> upper, lower;
  const double fy = out.branch_point.y();
  const double fx = out.branch_point.x();
  for (std::size_t s = branch_snap; s < std::min(snaps.size(), branch_snap + 20); ++s) {
    const auto pts = damaged_points(snaps[s]);
    Index up = -1, lo = -1;
    for (Index i : pts) {
      const Vec2& p = cloud.positions[i];
      if (p.x() < fx - 2 * h) continue;
      if (p.y() > fy + 0.5 * h && (up < 0 || p.x() > cloud.positions[up].x())) up = i;
      if (p.y() < fy - 0.5 * h && (lo < 0 || p.x() > cloud.positions[lo].x())) lo = i;
    }
    if (up >= 0) upper.push_back(cloud.positions[up]);
    if (lo >= 0) lower.push_back(cloud.positions[lo]);
  }
  auto fit_dir = [&](const std::vector<Vec2>& pts) -> Vec2 {
    if (pts.size() < 2) return Vec2(1, 0);
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
      xs.push_back(p.x() - fx);
      ys.push_back(p.y() - fy);
    }
    const double m = ls_slope(xs, ys);
    return Vec2(1.0, m).normalized();
  };
  const Vec2 du = fit_dir(upper);
  const Vec2 dl = fit_dir(lower);
  out.branch_angle_deg = std::acos(std::clamp(du.dot(dl), -1.0, 1.0)) * 180.0 / kPi;
  return out;
}

// ---------------------------------------------------------------------------
// Fragments: connected components of the intact-bond graph
// ---------------------------------------------------------------------------

struct FragmentCount {
  int large = 0;
  int small = 0;
};

// Components with at least 1% of the material points are "large"; smaller
// ones except singletons are "small".
inline FragmentCount count_fragments(const PointCloud& cloud, const Mask& gamma) {
  std::vector<Index> parent(cloud.size());
  std::iota(parent.begin(), parent.end(), Index{0});
  std::function<Index(Index)> find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  Index total = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!cloud.in_omega(i)) continue;
    ++total;
    for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k) {
      const Index j = cloud.nbr[k];
      if (!gamma[k] || !cloud.in_omega(j)) continue;
      parent[find(i)] = find(j);
    }
  }
  std::unordered_map<Index, Index> sizes;
  for (Index i = 0; i < cloud.size(); ++i)
    if (cloud.in_omega(i)) ++sizes[find(i)];
  FragmentCount out;
  for (const auto& [root, n] : sizes) {
    if (n >= std::max<Index>(1, total / 100))
      ++out.large;
    else if (n >= 2)
      ++out.small;
  }
  return out;
}

}  // namespace perilps
