#pragma once

#include "perilps/analytic.hpp"
#include "perilps/io.hpp"

#include <iostream>
#include <map>
#include <sstream>

namespace perilps {

// ---------------------------------------------------------------------------
// Benchmark specification
// ---------------------------------------------------------------------------

struct BenchmarkSpec {
  std::string problem = "patch1";
  double h = kPi / 16;
  std::vector<double> h_list;
  double m_ratio = 3.5;
  double nu = 0.3;
  double nu2 = 0.3;          // second phase (composite)
  double youngs = 1.0;
  double youngs2 = 1.0;      // second phase (composite)
  double perturb = 0.0;
  std::uint64_t seed = 0;
  std::string normals = "estimated";
  double dt = 0.0;
  double t_end = 0.0;
  int particles = 0;         // ring resolution override
  int dump_fields = 0;       // snapshot cadence in steps; 0 = defaults
  std::string out;

  NormalMode normal_mode() const {
    if (normals == "estimated") return NormalMode::Estimated;
    if (normals == "exact") return NormalMode::Exact;
    throw ConfigError("normals must be 'estimated' or 'exact'");
  }

  void validate() const {
    if (m_ratio < 3.0 || m_ratio > 4.5) throw ConfigError("m-ratio must lie in [3, 4.5]");
    if (!(nu < 0.5) || !(nu2 < 0.5)) throw ConfigError("Poisson ratio must be below 0.5");
    if (!(h > 0) || !(youngs > 0)) throw ConfigError("lengths and moduli must be positive");
    (void)normal_mode();
  }

  std::map<std::string, std::string> to_kv() const {
    std::map<std::string, std::string> kv;
    auto num = [](double v) {
      std::ostringstream os;
      os << std::setprecision(17) << v;
      return os.str();
    };
    kv["problem"] = problem;
    kv["h"] = num(h);
    if (!h_list.empty()) {
      std::ostringstream os;
      os << std::setprecision(17);
      for (std::size_t i = 0; i < h_list.size(); ++i) os << (i ? "," : "") << h_list[i];
      kv["h_list"] = os.str();
    }
    kv["m_ratio"] = num(m_ratio);
    kv["nu"] = num(nu);
    kv["nu2"] = num(nu2);
    kv["youngs"] = num(youngs);
    kv["youngs2"] = num(youngs2);
    kv["perturb"] = num(perturb);
    kv["seed"] = std::to_string(seed);
    kv["normals"] = normals;
    kv["dt"] = num(dt);
    kv["t_end"] = num(t_end);
    kv["particles"] = std::to_string(particles);
    kv["dump_fields"] = std::to_string(dump_fields);
    kv["out"] = out;
    return kv;
  }

  static BenchmarkSpec from_kv(const std::map<std::string, std::string>& kv) {
    BenchmarkSpec s;
    auto get = [&](const char* k) -> const std::string* {
      auto it = kv.find(k);
      return it == kv.end() ? nullptr : &it->second;
    };
    if (auto v = get("problem")) s.problem = *v;
    if (auto v = get("h")) s.h = std::stod(*v);
    if (auto v = get("h_list")) {
      std::stringstream ss(*v);
      std::string tok;
      while (std::getline(ss, tok, ',')) s.h_list.push_back(std::stod(tok));
    }
    if (auto v = get("m_ratio")) s.m_ratio = std::stod(*v);
    if (auto v = get("nu")) s.nu = std::stod(*v);
    if (auto v = get("nu2")) s.nu2 = std::stod(*v);
    if (auto v = get("youngs")) s.youngs = std::stod(*v);
    if (auto v = get("youngs2")) s.youngs2 = std::stod(*v);
    if (auto v = get("perturb")) s.perturb = std::stod(*v);
    if (auto v = get("seed")) s.seed = std::stoull(*v);
    if (auto v = get("normals")) s.normals = *v;
    if (auto v = get("dt")) s.dt = std::stod(*v);
    if (auto v = get("t_end")) s.t_end = std::stod(*v);
    if (auto v = get("particles")) s.particles = std::stoi(*v);
    if (auto v = get("dump_fields")) s.dump_fields = std::stoi(*v);
    if (auto v = get("out")) s.out = *v;
    return s;
  }

  std::string to_line() const {
    std::string line;
    for (const auto& [k, v] : to_kv()) {
      if (!line.empty()) line += " ";
      line += k + "=" + v;
    }
    return line;
  }

  bool operator==(const BenchmarkSpec& o) const { return to_kv() == o.to_kv(); }
};

// ---------------------------------------------------------------------------
// Static benchmark wiring
// ---------------------------------------------------------------------------

struct StaticSetup {
  Domain domain;
  std::function<MaterialField(const PointCloud&)> material;
  BoundaryConditions bcs;
  std::function<Vec2(const Vec2&)> exact_u;
  std::function<double(const Vec2&)> exact_div;
};

inline StaticSetup make_static_setup(const BenchmarkSpec& spec) {
  StaticSetup s;
  const std::string& id = spec.problem;
  const Material mat = Material::plane_strain(spec.youngs, spec.nu);

  auto homo = [mat](const PointCloud& cloud) { return MaterialField::homogeneous(mat, cloud.size()); };

  if (id == "patch1" || id == "patch2" || id == "patch3") {
    const auto which = id == "patch1" ? SquareNeumann::None
                       : id == "patch2" ? SquareNeumann::Top
                                        : SquareNeumann::TopRight;
    s.domain = make_square(kPi / 2, which);
    PatchSolution sol{mat};
    s.material = homo;
    s.exact_u = [sol](const Vec2& x) { return sol.u(x); };
    s.exact_div = [sol](const Vec2& x) { return sol.div_u(x); };
    s.bcs.dirichlet = [sol](const Vec2& x) { return sol.u(x); };
    if (which != SquareNeumann::None)
      s.bcs.traction = [sol](const Vec2& xbar, const Vec2& n, double) { return sol.stress(xbar) * n; };
    return s;
  }
  if (id == "manufactured1" || id == "manufactured2" || id == "manufactured3") {
    const auto which = id == "manufactured1" ? SquareNeumann::None
                       : id == "manufactured2" ? SquareNeumann::Top
                                               : SquareNeumann::TopRight;
    s.domain = make_square(kPi / 2, which);
    ManufacturedSolution sol{mat, 0.4};
    s.material = homo;
    s.exact_u = [sol](const Vec2& x) { return sol.u(x); };
    s.exact_div = [sol](const Vec2& x) { return sol.div_u(x); };
    s.bcs.dirichlet = [sol](const Vec2& x) { return sol.u(x); };
    s.bcs.body = [sol](const Vec2& x, double) { return sol.body(x); };
    if (which != SquareNeumann::None)
      s.bcs.traction = [sol](const Vec2& xbar, const Vec2& n, double) { return sol.stress(xbar) * n; };
    return s;
  }
  if (id == "hole") {
    s.domain = make_square_with_hole(0.5, 0.2);
    HoleSolution sol{mat, 1.0, 0.2};
    s.material = homo;
    s.exact_u = [sol](const Vec2& x) { return sol.u(x); };
    s.exact_div = [sol](const Vec2& x) { return sol.div_u(x); };
    s.bcs.dirichlet = [sol](const Vec2& x) { return sol.u(x); };
    // free surface: T = 0, no traction callback needed
    return s;
  }
  if (id == "disk") {
    s.domain = make_annulus(1.0, 1.5, true);
    DiskSolution sol;
    sol.E = spec.youngs;
    sol.nu = spec.nu;
    s.material = homo;
    s.exact_u = [sol](const Vec2& x) { return sol.u(x); };
    s.exact_div = [sol](const Vec2& x) { return sol.div_u(x); };
    s.bcs.dirichlet = [sol](const Vec2& x) { return sol.u(x); };
    s.bcs.traction = [sol](const Vec2& xbar, const Vec2&, double) { return sol.inner_traction(xbar); };
    return s;
  }
  if (id == "composite") {
    s.domain = make_square(0.5, SquareNeumann::None);
    InclusionSolution sol;
    sol.mat1 = Material::plane_strain(spec.youngs, spec.nu);
    sol.mat2 = Material::plane_strain(spec.youngs2, spec.nu2);
    sol.P_inf = 1.0;
    sol.a = 0.2;
    s.material = [sol](const PointCloud& cloud) {
      return MaterialField::from_function(cloud, [sol](const Vec2& x) { return sol.material_at(x); });
    };
    s.exact_u = [sol](const Vec2& x) { return sol.u(x); };
    s.exact_div = [sol](const Vec2& x) { return sol.div_u(x); };
    s.bcs.dirichlet = [sol](const Vec2& x) { return sol.u(x); };
    return s;
  }
  throw ConfigError("unknown static benchmark '" + id + "'");
}

struct StaticRun {
  PointCloud cloud;
  QuadratureRule rule;
  Mask gamma;
  StaticSolution sol;
  double err_u = 0;
  double err_theta = 0;
};

inline StaticRun run_static_once(const BenchmarkSpec& spec, const StaticSetup& setup, double h) {
  StaticRun r;
  const double delta = spec.m_ratio * h;
  r.cloud = generate_grid(setup.domain, h, delta, spec.perturb, spec.seed);
  build_neighbors(r.cloud);
  r.rule = build_quadrature(r.cloud);
  r.gamma = mask_from_domain(r.cloud, setup.domain);
  const auto frames = build_frames(r.cloud, r.rule, r.gamma, setup.domain, spec.normal_mode());
  const KernelSpec kernel = KernelSpec::make(delta);
  const MaterialField material = setup.material(r.cloud);
  r.sol = solve_static(r.cloud, r.rule, r.gamma, kernel, material, frames, setup.bcs);
  r.err_u = l2_error(r.cloud, r.sol.u, setup.exact_u);
  r.err_theta = l2_error_scalar(r.cloud, r.sol.theta, setup.exact_div);
  return r;
}

inline ConvergenceTable run_convergence(const BenchmarkSpec& spec) {
  const StaticSetup setup = make_static_setup(spec);
  std::vector<double> hs = spec.h_list.empty() ? std::vector<double>{spec.h} : spec.h_list;
  ConvergenceTable table;
  for (double h : hs) {
    const StaticRun r = run_static_once(spec, setup, h);
    table.rows.push_back({h, spec.m_ratio * h, r.err_u, r.err_theta});
  }
  if (table.rows.size() >= 2) table.fit();
  return table;
}

// ---------------------------------------------------------------------------
// Dynamic benchmark wiring
// ---------------------------------------------------------------------------

struct DynamicSetup {
  Domain domain;
  Material material;
  BoundaryConditions bcs;
  std::vector<std::pair<Vec2, Vec2>> precracks;
  double default_h = 0;
  double default_dt = 0;
  double default_t_end = 0;
  double default_m = 4.0;
  double default_perturb = 0.0;
};

inline DynamicSetup make_dynamic_setup(const BenchmarkSpec& spec) {
  DynamicSetup s;
  const std::string& id = spec.problem;
  if (id == "glass_branch") {
    // Pre-notched plate 0.1 m x 0.04 m under sudden tension on top and bottom.
    s.domain = make_rectangle_free({Vec2(0.0, -0.02), Vec2(0.1, 0.02)});
    s.material = Material::plane_strain(72e9, 0.23, 2440.0, 3.8);
    s.precracks = {{Vec2(-0.01, 0.0), Vec2(0.05, 0.0)}};
    const double sigma = 2e6;
    s.bcs.traction = [sigma](const Vec2& xbar, const Vec2&, double) {
      if (std::abs(xbar.y() - 0.02) < std::abs(xbar.y() + 0.02) &&
          std::abs(xbar.y() - 0.02) < 0.005)
        return Vec2(0.0, sigma);
      if (std::abs(xbar.y() + 0.02) < 0.005) return Vec2(0.0, -sigma);
      return Vec2(0.0, 0.0);
    };
    s.default_h = 5e-4;
    s.default_dt = 6.25e-8;
    s.default_t_end = 42e-6;
    return s;
  }
  if (id == "ring") {
    // Cylinder R0=80mm, R1=150mm under decaying internal pressure.
    const double R0 = 0.08, R1 = 0.15;
    s.domain = make_annulus(R0, R1, false);
    s.material = Material::plane_strain(200e9, 0.3, 7800.0, 1.125e5);
    const double p0 = 2.5e9, t0 = 1e-5;
    s.bcs.traction = [R0, R1, p0, t0](const Vec2& xbar, const Vec2&, double t) {
      if (xbar.norm() < 0.5 * (R0 + R1))
        return Vec2(p0 * std::exp(-t / t0) * xbar.normalized());
      return Vec2(0.0, 0.0);
    };
    double h = 4.0e-3;
    if (spec.particles > 0) {
      const double area = kPi * (R1 * R1 - R0 * R0);
      h = std::sqrt(area / spec.particles);
    }
    s.default_h = h;
    s.default_dt = 5e-8;
    s.default_t_end = 2e-4;
    s.default_perturb = 0.2;
    return s;
  }
  if (id == "vnotch") {
    // V-notched plate impacted on the notch faces (plane stress).
    const double W = 0.1, H = 0.05, depth = 0.012, half_angle = kPi / 6;
    s.domain = make_vnotch_plate(W, H, depth, half_angle);
    s.material = Material::plane_stress(70e9, 0.22, 2500.0, 8.0);
    const double hw = depth * std::tan(half_angle);
    const Vec2 mouth_up(0.0, 0.5 * H + hw), apex(depth, 0.5 * H), mouth_lo(0.0, 0.5 * H - hw);
    const double band = 2.5e-3;
    auto p_of_t = [](double t) {
      // piecewise-linear approximation of the measured impact force
      const double pmax = 8e7;
      const double us = 1e-6;
      if (t < 10 * us) return pmax * t / (10 * us);
      if (t < 25 * us) return pmax * (1.0 - 0.5 * (t - 10 * us) / (15 * us));
      return 0.5 * pmax;
    };
    s.bcs.traction = [=](const Vec2& xbar, const Vec2& n, double t) {
      const double d_up = detail::dist_to_segment(xbar, mouth_up, apex);
      const double d_lo = detail::dist_to_segment(xbar, mouth_lo, apex);
      if (std::min(d_up, d_lo) < band) return Vec2(-p_of_t(t) * n);
      return Vec2(0.0, 0.0);
    };
    s.default_h = 1e-3;
    s.default_dt = 1.25e-7;
    s.default_t_end = 40e-6;
    return s;
  }
  throw ConfigError("unknown dynamic benchmark '" + id + "'");
}

struct DynamicsResult {
  PointCloud cloud;
  FractureState state;
  std::vector<DamageSnapshot> snaps;
  CrackFeatures features;
  FragmentCount fragments;
};

inline DynamicsResult run_dynamic(const BenchmarkSpec& spec, bool verbose = false) {
  DynamicSetup setup = make_dynamic_setup(spec);
  const double h = spec.h > 0 ? spec.h : setup.default_h;
  const double dt = spec.dt > 0 ? spec.dt : setup.default_dt;
  const double t_end = spec.t_end > 0 ? spec.t_end : setup.default_t_end;
  const double m_ratio = spec.m_ratio > 0 ? spec.m_ratio : setup.default_m;
  const double perturb = spec.perturb > 0 ? spec.perturb : setup.default_perturb;
  const double delta = m_ratio * h;

  DynamicsResult out;
  out.cloud = generate_grid(setup.domain, h, delta, perturb, spec.seed, /*cell_centered=*/true);
  build_neighbors(out.cloud);
  const QuadratureRule rule = build_quadrature(out.cloud);
  const KernelSpec kernel = KernelSpec::make(delta);
  const MaterialField material = MaterialField::homogeneous(setup.material, out.cloud.size());

  Mask gamma = mask_from_domain(out.cloud, setup.domain);
  for (const auto& [a, b] : setup.precracks) break_bonds_crossing_segment(out.cloud, gamma, a, b);

  DynamicsConfig cfg;
  cfg.dt = dt;
  cfg.criterion = FractureCriterion::from_material(setup.material, delta);
  cfg.normals = spec.normal_mode();
  NewmarkSolver solver(out.cloud, rule, kernel, material, setup.domain, setup.bcs, cfg);

  out.state = FractureState::zero(out.cloud, std::move(gamma));
  const Index nsteps = static_cast<Index>(std::llround(t_end / dt));
  const int snap_every = spec.dump_fields > 0
                             ? spec.dump_fields
                             : std::max<int>(1, static_cast<int>(nsteps / 40));

  auto snapshot = [&]() {
    out.snaps.push_back({out.state.t, damage_field(out.cloud, out.state.gamma)});
    if (!spec.out.empty()) {
      write_snapshot_csv(spec.out + "/snapshot_" + std::to_string(out.snaps.size() - 1) + ".csv",
                         out.cloud, out.state, out.snaps.back().phi, spec.to_line());
    }
  };
  snapshot();
  for (Index n = 0; n < nsteps; ++n) {
    solver.step(out.state);
    if ((n + 1) % snap_every == 0 || n + 1 == nsteps) snapshot();
    if (verbose && (n + 1) % 50 == 0)
      std::cerr << "step " << (n + 1) << "/" << nsteps << " t=" << out.state.t
                << " solves=" << solver.total_solves() << "\n";
  }
  out.features = extract_crack_features(out.cloud, out.snaps);
  out.fragments = count_fragments(out.cloud, out.state.gamma);
  return out;
}

}  // namespace perilps
