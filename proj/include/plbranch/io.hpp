#pragma once

// Serialized outputs: CSV with a header row, '.' decimal separator and 17
// significant digits (doubles round-trip exactly), JSON for structured
// metadata.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plbranch/field.hpp"
#include "plbranch/localmap.hpp"
#include "plbranch/nonlocal.hpp"
#include "plbranch/problem.hpp"

namespace plbranch {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

inline std::string solution_csv(const Field& u, const BarrierSet* bars = nullptr) {
  std::ostringstream os;
  os << "x,u,lower_barrier,upper_barrier\n";
  for (int i = 0; i < u.size(); ++i) {
    os << fmt17(u.mesh->nodes[i]) << ',' << fmt17(u.values[i]) << ',';
    if (bars) {
      os << fmt17(bars->lower.values[i]) << ',' << fmt17(bars->upper.values[i]);
    } else {
      os << "nan,nan";
    }
    os << '\n';
  }
  return os.str();
}

inline std::string branch_csv(const Branch& branch) {
  std::ostringstream os;
  os << "alpha,lambda,sup_norm,G,converged\n";
  for (const auto& p : branch.points) {
    os << fmt17(p.alpha) << ',' << fmt17(p.H_value) << ',' << fmt17(p.sup_norm) << ','
       << fmt17(p.G_value) << ',' << (p.converged ? 1 : 0) << '\n';
  }
  return os.str();
}

inline Branch parse_branch_csv(const std::string& text) {
  Branch branch;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("alpha,lambda,sup_norm,G,converged", 0) != 0)
    throw std::runtime_error("branch CSV: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    BranchPoint p;
    int conv = 0;
    if (!(ls >> p.alpha >> p.H_value >> p.sup_norm >> p.G_value >> conv))
      throw std::runtime_error("branch CSV: malformed row '" + line + "'");
    p.converged = conv != 0;
    branch.points.push_back(p);
  }
  return branch;
}

inline nlohmann::json report_json(const SolveReport& rep) {
  return {{"iterations", rep.iterations},
          {"final_residual", rep.final_residual},
          {"converged", rep.converged},
          {"damping_events", rep.damping_events},
          {"floor_activations", rep.floor_activations}};
}

inline nlohmann::json branch_json(const Branch& branch) {
  nlohmann::json j;
  j["case_label"] = to_string(branch.case_label);
  if (branch.lambda_star) j["lambda_star"] = *branch.lambda_star;
  else j["lambda_star"] = nullptr;
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [lambda, count] : branch.multiplicity_table)
    table.push_back({{"lambda", lambda}, {"count", count}});
  j["multiplicity_table"] = table;
  int ok = 0;
  for (const auto& p : branch.points) ok += p.converged ? 1 : 0;
  j["points"] = static_cast<int>(branch.points.size());
  j["points_converged"] = ok;
  return j;
}

}  // namespace plbranch
