#pragma once

// Declarative run configuration: a flat key/value text file with dotted
// section keys. Potentials and kernels come from a named catalogue (plus
// tabulated data files); there is no expression language.
//
//   problem.p = 2            mesh.kind = interval      sweep.alpha_min = 1e-2
//   problem.delta = 1        mesh.a = 0                sweep.alpha_max = 1e2
//   problem.beta = 0.5       mesh.b = 1                sweep.K = 24
//   problem.r = 1            mesh.M = 256              tol.ladder = 1e-6
//   problem.a = constant:1                             tol.newton = 1e-10
//   problem.b = constant:1   output.dir = out          run.seed = 12345
//   problem.kernel = power:0.5                         run.threads = 1
//
// Catalogue names:
//   potentials: constant:<v> | dist_power:<s>    (d(x)^{-s}) | tabulated:<csv>
//   kernels:    constant:<c> | power:<theta>     (t^{-theta})
//             | shifted_power:<theta>            ((1+t)^{-theta})
//             | power2:<theta1>,<theta2>         (t^{-theta2} (1+t)^{theta2-theta1})
//             | tabulated:<csv>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "plbranch/mesh.hpp"
#include "plbranch/problem.hpp"

namespace plbranch {

struct RunConfig {
  double p = 2.0, delta = 1.0, beta = 0.5, r = 0.0;
  std::string a_name = "constant:1";
  std::string b_name = "constant:1";
  std::string kernel_name = "constant:1";

  std::string mesh_kind = "interval";
  double mesh_a = 0.0, mesh_b = 1.0;  // interval endpoints
  double mesh_R = 1.0;                // ball radius
  int mesh_N = 2;                     // ball dimension
  int mesh_M = 256;

  double alpha_min = 1e-2, alpha_max = 1e2;
  int sweep_K = 24;

  double ladder_tol = 1e-6;
  double newton_tol = 1e-10;

  std::optional<double> barrier_q, barrier_l;  // deliberate overrides

  unsigned long seed = 12345;
  int threads = 1;
  std::string out_dir = "out";
  std::string out_format = "csv";

  std::string base_dir;  // directory of the config file, for tabulated paths
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw validation_error("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw validation_error("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

// name:args -> {name, args}
inline std::pair<std::string, std::string> split_catalogue(const std::string& v) {
  const auto c = v.find(':');
  if (c == std::string::npos) return {v, ""};
  return {trim(v.substr(0, c)), trim(v.substr(c + 1))};
}

struct Table {
  std::vector<double> x, y;
  double operator()(double t) const {
    if (x.empty()) return 0.0;
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const std::size_t i = it - x.begin();
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + w * (y[i] - y[i - 1]);
  }
};

inline Table load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("config: cannot open tabulated file '" + path + "'");
  Table tb;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (ls >> a >> b) {
      tb.x.push_back(a);
      tb.y.push_back(b);
    }
  }
  if (tb.x.size() < 2) throw validation_error("config: tabulated file '" + path +
                                              "' needs at least two rows");
  for (std::size_t i = 1; i < tb.x.size(); ++i)
    if (!(tb.x[i] > tb.x[i - 1]))
      throw validation_error("config: tabulated abscissae must be strictly increasing");
  return tb;
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text, const std::string& base_dir = "") {
  static const std::map<std::string, int> known = {
      {"problem.p", 0},      {"problem.delta", 0},  {"problem.beta", 0},
      {"problem.r", 0},      {"problem.a", 0},      {"problem.b", 0},
      {"problem.kernel", 0}, {"mesh.kind", 0},      {"mesh.a", 0},
      {"mesh.b", 0},         {"mesh.R", 0},         {"mesh.N", 0},
      {"mesh.M", 0},         {"sweep.alpha_min", 0}, {"sweep.alpha_max", 0},
      {"sweep.K", 0},        {"tol.ladder", 0},     {"tol.newton", 0},
      {"barrier.q", 0},      {"barrier.l", 0},      {"run.seed", 0},
      {"run.threads", 0},    {"output.dir", 0},     {"output.format", 0}};

  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw validation_error("config: line " + std::to_string(lineno) +
                             " is not of the form key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (known.find(key) == known.end())
      throw validation_error("config: unknown key '" + key + "'");
    if (val.empty()) throw validation_error("config: key '" + key + "' has no value");

    if (key == "problem.p") cfg.p = detail::to_double(key, val);
    else if (key == "problem.delta") cfg.delta = detail::to_double(key, val);
    else if (key == "problem.beta") cfg.beta = detail::to_double(key, val);
    else if (key == "problem.r") cfg.r = detail::to_double(key, val);
    else if (key == "problem.a") cfg.a_name = val;
    else if (key == "problem.b") cfg.b_name = val;
    else if (key == "problem.kernel") cfg.kernel_name = val;
    else if (key == "mesh.kind") cfg.mesh_kind = val;
    else if (key == "mesh.a") cfg.mesh_a = detail::to_double(key, val);
    else if (key == "mesh.b") cfg.mesh_b = detail::to_double(key, val);
    else if (key == "mesh.R") cfg.mesh_R = detail::to_double(key, val);
    else if (key == "mesh.N") cfg.mesh_N = static_cast<int>(detail::to_long(key, val));
    else if (key == "mesh.M") cfg.mesh_M = static_cast<int>(detail::to_long(key, val));
    else if (key == "sweep.alpha_min") cfg.alpha_min = detail::to_double(key, val);
    else if (key == "sweep.alpha_max") cfg.alpha_max = detail::to_double(key, val);
    else if (key == "sweep.K") cfg.sweep_K = static_cast<int>(detail::to_long(key, val));
    else if (key == "tol.ladder") cfg.ladder_tol = detail::to_double(key, val);
    else if (key == "tol.newton") cfg.newton_tol = detail::to_double(key, val);
    else if (key == "barrier.q") cfg.barrier_q = detail::to_double(key, val);
    else if (key == "barrier.l") cfg.barrier_l = detail::to_double(key, val);
    else if (key == "run.seed") cfg.seed = static_cast<unsigned long>(detail::to_long(key, val));
    else if (key == "run.threads") cfg.threads = static_cast<int>(detail::to_long(key, val));
    else if (key == "output.dir") cfg.out_dir = val;
    else if (key == "output.format") cfg.out_format = val;
  }

  if (cfg.mesh_kind != "interval" && cfg.mesh_kind != "radial")
    throw validation_error("config: mesh.kind must be 'interval' or 'radial'");
  if (cfg.out_format != "csv")
    throw validation_error("config: output.format supports only 'csv'");
  if (cfg.threads < 1) throw validation_error("config: run.threads must be >= 1");
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string dir;
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash + 1);
  return parse_config_text(ss.str(), dir);
}

inline std::shared_ptr<const Mesh> build_mesh(const RunConfig& cfg) {
  try {
    if (cfg.mesh_kind == "interval") return build_interval(cfg.mesh_a, cfg.mesh_b, cfg.mesh_M);
    return build_radial(cfg.mesh_R, cfg.mesh_N, cfg.mesh_M);
  } catch (const std::invalid_argument& e) {
    throw validation_error(std::string("config: ") + e.what());
  }
}

namespace detail {

inline ScalarFn make_potential(const RunConfig& cfg, const std::string& spec_str) {
  const auto [name, args] = split_catalogue(spec_str);
  if (name == "constant") {
    const double v = to_double("potential constant", args);
    if (v < 0.0) throw validation_error("config: potentials must be nonnegative");
    return [v](double) { return v; };
  }
  if (name == "dist_power") {
    const double s = to_double("dist_power exponent", args);
    if (cfg.mesh_kind == "interval") {
      const double a = cfg.mesh_a, b = cfg.mesh_b;
      return [a, b, s](double x) { return std::pow(std::min(x - a, b - x), -s); };
    }
    const double R = cfg.mesh_R;
    return [R, s](double rr) { return std::pow(R - rr, -s); };
  }
  if (name == "tabulated") {
    Table tb = load_table(cfg.base_dir + args);
    return [tb](double x) { return tb(x); };
  }
  throw validation_error("config: unknown potential '" + spec_str + "'");
}

}  // namespace detail

inline ProblemSpec build_spec(const RunConfig& cfg) {
  ProblemSpec s;
  s.p = cfg.p;
  s.delta = cfg.delta;
  s.beta = cfg.beta;
  s.r = cfg.r;
  s.a_fn = detail::make_potential(cfg, cfg.a_name);
  s.b_fn = detail::make_potential(cfg, cfg.b_name);

  const auto [name, args] = detail::split_catalogue(cfg.kernel_name);
  if (name == "constant") {
    const double c = detail::to_double("kernel constant", args);
    if (!(c > 0.0)) throw validation_error("config: kernel must be positive");
    s.g_fn = [c](double, double) { return c; };
    s.theta1 = 0.0;
    s.theta2 = 0.0;
    s.f1_fn = [c](double) { return c; };
    s.f2_fn = s.f1_fn;
  } else if (name == "power") {
    const double th = detail::to_double("kernel power exponent", args);
    s.g_fn = [th](double, double t) { return std::pow(t, -th); };
    s.theta1 = th;
    s.theta2 = th;
  } else if (name == "shifted_power") {
    const double th = detail::to_double("kernel shifted_power exponent", args);
    s.g_fn = [th](double, double t) { return std::pow(1.0 + t, -th); };
    s.theta1 = th;
    s.theta2 = 0.0;
  } else if (name == "power2") {
    const auto comma = args.find(',');
    if (comma == std::string::npos)
      throw validation_error("config: power2 kernel expects 'theta1,theta2'");
    const double th1 = detail::to_double("power2 theta1", detail::trim(args.substr(0, comma)));
    const double th2 = detail::to_double("power2 theta2", detail::trim(args.substr(comma + 1)));
    s.g_fn = [th1, th2](double, double t) {
      return std::pow(t, -th2) * std::pow(1.0 + t, th2 - th1);
    };
    s.theta1 = th1;
    s.theta2 = th2;
  } else if (name == "tabulated") {
    detail::Table tb = detail::load_table(cfg.base_dir + args);
    s.g_fn = [tb](double, double t) { return tb(t); };
  } else {
    throw validation_error("config: unknown kernel '" + cfg.kernel_name + "'");
  }
  return s;
}

}  // namespace plbranch
