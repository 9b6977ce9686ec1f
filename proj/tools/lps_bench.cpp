// Benchmark driver: one subcommand per problem, writing convergence tables,
// field dumps, damage snapshots and crack-feature summaries as CSV/JSON.

#include "perilps/benchmarks.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace perilps;

void add_common(CLI::App* cmd, BenchmarkSpec& spec, std::string& h_list_str) {
  cmd->add_option("--h", spec.h, "grid spacing");
  cmd->add_option("--h-list", h_list_str, "comma-separated spacings for a convergence study");
  cmd->add_option("--m-ratio", spec.m_ratio, "horizon ratio delta/h");
  cmd->add_option("--nu", spec.nu, "Poisson ratio (phase 1 for composite)");
  cmd->add_option("--nu2", spec.nu2, "Poisson ratio of phase 2 (composite)");
  cmd->add_option("--youngs", spec.youngs, "Young's modulus (phase 1 for composite)");
  cmd->add_option("--youngs2", spec.youngs2, "Young's modulus of phase 2 (composite)");
  cmd->add_option("--perturb", spec.perturb, "grid perturbation ratio in [0, 0.2]");
  cmd->add_option("--seed", spec.seed, "perturbation seed");
  cmd->add_option("--normals", spec.normals, "boundary normals: estimated|exact");
  cmd->add_option("--dt", spec.dt, "time step (dynamics)");
  cmd->add_option("--t-end", spec.t_end, "final time (dynamics)");
  cmd->add_option("--particles", spec.particles, "approximate particle count (ring)");
  cmd->add_option("--dump-fields", spec.dump_fields, "snapshot cadence in steps (dynamics)");
  cmd->add_option("--out", spec.out, "output directory");
}

std::vector<double> parse_h_list(const std::string& s) {
  std::vector<double> hs;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) hs.push_back(std::stod(tok));
  return hs;
}

int run_static(BenchmarkSpec spec) {
  spec.validate();
  const ConvergenceTable table = run_convergence(spec);
  std::cout << "h,delta,err_u_l2,err_theta_l2\n" << std::setprecision(6);
  for (const auto& r : table.rows)
    std::cout << r.h << "," << r.delta << "," << r.err_u << "," << r.err_theta << "\n";
  if (table.rows.size() >= 2)
    std::cout << "fitted slopes: u " << table.slope_u << ", theta " << table.slope_theta << "\n";
  if (!spec.out.empty()) {
    write_convergence_csv(spec.out + "/convergence.csv", table, spec.to_line());
    const StaticSetup setup = make_static_setup(spec);
    const StaticRun run = run_static_once(spec, setup, table.rows.back().h);
    write_field_csv(spec.out + "/fields.csv", run.cloud, run.sol, spec.to_line());
    write_cloud_csv(spec.out + "/cloud.csv", run.cloud, spec.to_line());
  }
  return 0;
}

int run_dynamics(BenchmarkSpec spec) {
  const DynamicSetup setup = make_dynamic_setup(spec);
  if (spec.h <= 0) spec.h = setup.default_h;
  if (spec.dt <= 0) spec.dt = setup.default_dt;
  if (spec.t_end <= 0) spec.t_end = setup.default_t_end;
  spec.validate();
  const DynamicsResult res = run_dynamic(spec, /*verbose=*/true);
  std::cout << "steps: " << res.state.step << ", t = " << res.state.t << "\n";
  std::cout << "fragments: " << res.fragments.large << " large, " << res.fragments.small
            << " small\n";
  if (res.features.branched) {
    std::cout << "branching at t = " << res.features.branch_time << " s, x = ("
              << res.features.branch_point.x() << ", " << res.features.branch_point.y()
              << "), angle = " << res.features.branch_angle_deg << " deg\n";
  } else {
    std::cout << "no branching detected\n";
  }
  std::cout << "max tip speed: " << res.features.max_speed << " m/s\n";
  if (!spec.out.empty())
    write_features_json(spec.out + "/features.json", res.features, res.fragments, spec.to_line());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D meshfree LPS peridynamics benchmark driver"};
  app.set_config("--config");
  app.require_subcommand(1);

  const std::vector<std::string> static_ids = {"patch1", "patch2", "patch3", "manufactured1",
                                               "manufactured2", "manufactured3", "hole",
                                               "disk", "composite"};
  const std::vector<std::string> dynamic_ids = {"glass_branch", "vnotch", "ring"};

  struct Entry {
    BenchmarkSpec spec;
    std::string h_list_str;
    CLI::App* cmd = nullptr;
    bool dynamic = false;
  };
  std::vector<std::unique_ptr<Entry>> entries;

  for (const auto& id : static_ids) {
    auto e = std::make_unique<Entry>();
    e->spec.problem = id;
    e->cmd = app.add_subcommand(id, "run the '" + id + "' benchmark");
    if (id == "composite") {
      e->spec.youngs = 2.0;
      e->spec.youngs2 = 1.0;
      e->spec.nu = 0.25;
      e->spec.nu2 = 0.25;
    }
    add_common(e->cmd, e->spec, e->h_list_str);
    entries.push_back(std::move(e));
  }
  for (const auto& id : dynamic_ids) {
    auto e = std::make_unique<Entry>();
    e->spec.problem = id;
    e->spec.h = 0;  // use per-problem defaults
    e->spec.m_ratio = 4.0;
    e->dynamic = true;
    e->cmd = app.add_subcommand(id, "run the '" + id + "' benchmark");
    add_common(e->cmd, e->spec, e->h_list_str);
    entries.push_back(std::move(e));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& e : entries) {
      if (!e->cmd->parsed()) continue;
      if (!e->h_list_str.empty()) e->spec.h_list = parse_h_list(e->h_list_str);
      if (e->dynamic) return run_dynamics(e->spec);
      return run_static(e->spec);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
