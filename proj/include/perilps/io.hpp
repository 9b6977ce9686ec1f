#pragma once

#include "perilps/dynamics.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace perilps {

// Every output file starts with a comment line carrying the generating spec.
inline std::ofstream open_csv(const std::string& path, const std::string& spec_line) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << "# spec: " << spec_line << "\n";
  out << std::setprecision(17);
  return out;
}

inline void write_cloud_csv(const std::string& path, const PointCloud& cloud,
                            const std::string& spec_line) {
  auto out = open_csv(path, spec_line);
  out << "x,y,region,cell_measure\n";
  for (Index i = 0; i < cloud.size(); ++i)
    out << cloud.positions[i].x() << ',' << cloud.positions[i].y() << ','
        << region_name(cloud.region[i]) << ',' << cloud.cell_measure[i] << '\n';
}

inline void write_field_csv(const std::string& path, const PointCloud& cloud,
                            const StaticSolution& sol, const std::string& spec_line) {
  auto out = open_csv(path, spec_line);
  out << "x,y,ux,uy,theta\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!sol.has_u[i]) continue;
    out << cloud.positions[i].x() << ',' << cloud.positions[i].y() << ',' << sol.u[i].x() << ','
        << sol.u[i].y() << ',' << sol.theta[i] << '\n';
  }
}

inline void write_convergence_csv(const std::string& path, const ConvergenceTable& table,
                                  const std::string& spec_line) {
  auto out = open_csv(path, spec_line);
  out << "h,delta,err_u_l2,err_theta_l2\n";
  for (const auto& r : table.rows)
    out << r.h << ',' << r.delta << ',' << r.err_u << ',' << r.err_theta << '\n';
}

inline void write_snapshot_csv(const std::string& path, const PointCloud& cloud,
                               const FractureState& state, const std::vector<double>& phi,
                               const std::string& spec_line) {
  auto out = open_csv(path, spec_line);
  out << "x,y,ux,uy,damage\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!cloud.in_omega(i)) continue;
    out << cloud.positions[i].x() << ',' << cloud.positions[i].y() << ',' << state.u[i].x() << ','
        << state.u[i].y() << ',' << phi[i] << '\n';
  }
}

inline void write_weights_csv(const std::string& path, const PointCloud& cloud,
                              const QuadratureRule& rule, const Mask& gamma,
                              const std::string& spec_line) {
  auto out = open_csv(path, spec_line);
  out << "i,j,omega,gamma\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    if (!rule.has_rule[i]) continue;
    for (Index k = cloud.nbr_begin(i); k < cloud.nbr_end(i); ++k)
      out << i << ',' << cloud.nbr[k] << ',' << rule.w[k] << ',' << int(gamma[k]) << '\n';
  }
}

inline void write_features_json(const std::string& path, const CrackFeatures& f,
                                const FragmentCount& frag, const std::string& spec_line) {
  nlohmann::json j;
  j["spec"] = spec_line;
  j["branched"] = f.branched;
  j["branch_time"] = f.branch_time;
  j["branch_location"] = {f.branch_point.x(), f.branch_point.y()};
  j["branch_angle_deg"] = f.branch_angle_deg;
  j["tip_time"] = f.tip_time;
  j["tip_x"] = f.tip_x;
  j["tip_speed"] = f.tip_speed;
  j["max_tip_speed"] = f.max_speed;
  j["fragments_large"] = frag.large;
  j["fragments_small"] = frag.small;
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << j.dump(2) << "\n";
}

}  // namespace perilps
