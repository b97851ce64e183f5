// Command-line front end: config-driven solves, eigenpair/torsion fields,
// branch tracing and the verification suites. Exit codes: 0 ok,
// 1 verification failure, 2 config error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "plbranch/config.hpp"
#include "plbranch/io.hpp"
#include "plbranch/localmap.hpp"
#include "plbranch/nonlocal.hpp"
#include "plbranch/spectral.hpp"
#include "plbranch/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plbranch;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::optional<long> seed;
  std::optional<int> threads;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = parse_config_file(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.seed) cfg.seed = static_cast<unsigned long>(*args.seed);
  if (const char* env = std::getenv("PLBRANCH_THREADS")) cfg.threads = std::atoi(env);
  if (args.threads) cfg.threads = *args.threads;
  if (cfg.threads < 1) throw validation_error("thread count must be >= 1");
  return cfg;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

LadderOptions ladder_options(const RunConfig& cfg) {
  LadderOptions l;
  l.ladder_tol = cfg.ladder_tol;
  l.newton.tol = cfg.newton_tol;
  return l;
}

json barrier_json(const BarrierSet& bs) {
  return {{"regime", bs.regime == BarrierRegime::SmallAlpha ? "SmallAlpha" : "LargeAlpha"},
          {"q", bs.q},
          {"l", bs.l},
          {"t", bs.t},
          {"valid", bs.valid},
          {"alpha0", bs.alpha0},
          {"alpha_inf", std::isfinite(bs.alpha_inf) ? json(bs.alpha_inf) : json(nullptr)}};
}

int cmd_solve(const CommonArgs& args, double alpha) {
  const RunConfig cfg = load_config(args);
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);
  if (!(alpha > 0.0)) throw validation_error("--alpha must be positive");

  LocalSolutionMap map(spec, mesh, ladder_options(cfg));
  const LadderResult res = map.solve(alpha);

  json j;
  j["alpha"] = alpha;
  j["sup_norm"] = sup_norm(res.u);
  j["report"] = report_json(res.report);
  j["ladder_levels"] = res.levels;
  j["ladder_gaps"] = res.gaps;
  j["polished"] = res.polished;

  std::optional<BarrierSet> chosen;
  try {
    const EigenPair eig = first_eigenpair(spec, mesh);
    const TorsionField tor = torsion(spec, mesh);
    if (!tor.trivial) {
      BarrierSet small = barriers(spec, mesh, eig, tor, alpha, BarrierRegime::SmallAlpha,
                                  cfg.barrier_q, cfg.barrier_l);
      BarrierSet large = barriers(spec, mesh, eig, tor, alpha, BarrierRegime::LargeAlpha,
                                  cfg.barrier_q, cfg.barrier_l);
      chosen = small.valid ? small : (large.valid ? large : small);
      j["barriers"] = barrier_json(*chosen);
      j["barrier_membership"] = check_membership(res.u, *chosen);
    }
  } catch (const zero_eigen_weight_error&) {
    j["barriers"] = nullptr;  // H1 = 0: no sandwich for this data
  }

  const fs::path dir = ensure_out_dir(cfg);
  write_text_file((dir / "solve.csv").string(),
                  solution_csv(res.u, chosen ? &*chosen : nullptr));
  write_text_file((dir / "solve.json").string(), j.dump(2) + "\n");
  std::cout << "solve: alpha=" << alpha << " sup=" << sup_norm(res.u) << " iters="
            << res.report.iterations << " residual=" << res.report.final_residual << "\n";
  return 0;
}

int cmd_eig(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);
  const EigenPair eig = first_eigenpair(spec, mesh);

  std::ostringstream csv;
  csv << "x,phi1,H1\n";
  for (int i = 0; i < eig.phi1.size(); ++i)
    csv << fmt17(mesh->nodes[i]) << ',' << fmt17(eig.phi1.values[i]) << ','
        << fmt17(eig.weight_H1.values[i]) << '\n';

  json j{{"lambda1", eig.lambda1}, {"iterations", eig.iterations}};
  const fs::path dir = ensure_out_dir(cfg);
  write_text_file((dir / "eig.csv").string(), csv.str());
  write_text_file((dir / "eig.json").string(), j.dump(2) + "\n");
  std::cout << "eig: lambda1=" << eig.lambda1 << " iters=" << eig.iterations << "\n";
  return 0;
}

int cmd_torsion(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);
  const TorsionField tor = torsion(spec, mesh);
  if (tor.trivial)
    std::cerr << "warning: H2 = max{a,b} vanishes identically; e = 0\n";

  std::ostringstream csv;
  csv << "x,e,H2\n";
  for (int i = 0; i < tor.e_field.size(); ++i)
    csv << fmt17(mesh->nodes[i]) << ',' << fmt17(tor.e_field.values[i]) << ','
        << fmt17(tor.weight_H2.values[i]) << '\n';

  json j{{"sup_e", sup_norm(tor.e_field)},
         {"trivial", tor.trivial},
         {"report", report_json(tor.report)}};
  const fs::path dir = ensure_out_dir(cfg);
  write_text_file((dir / "torsion.csv").string(), csv.str());
  write_text_file((dir / "torsion.json").string(), j.dump(2) + "\n");
  std::cout << "torsion: sup_e=" << sup_norm(tor.e_field) << "\n";
  return 0;
}

int cmd_trace(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);

  TraceOptions topts;
  topts.threads = cfg.threads;
  topts.ladder = ladder_options(cfg);
  BranchTracer tracer(spec, mesh, topts);
  Branch branch = tracer.trace_branch(cfg.alpha_min, cfg.alpha_max, cfg.sweep_K);
  try {
    branch.case_label = classify(branch);
  } catch (const std::invalid_argument& e) {
    std::cerr << "note: classification unavailable (" << e.what() << ")\n";
    branch.case_label = CaseLabel::Unclassified;
  }
  if (branch.case_label == CaseLabel::Case1b || branch.case_label == CaseLabel::Case2a)
    tracer.find_lambda_star(branch);

  json j = branch_json(branch);
  const auto [kname, kargs] = detail::split_catalogue(cfg.kernel_name);
  if (kname == "tabulated")
    j["theorem_prediction"] = "unavailable (kernel has no declared exponents)";

  const fs::path dir = ensure_out_dir(cfg);
  write_text_file((dir / "branch.csv").string(), branch_csv(branch));
  write_text_file((dir / "branch.json").string(), j.dump(2) + "\n");
  std::cout << "trace: " << branch.points.size() << " points, case=" <<
      to_string(branch.case_label);
  if (branch.lambda_star) std::cout << ", lambda*=" << *branch.lambda_star;
  std::cout << "\n";
  return 0;
}

int cmd_verify(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const auto results = run_verification(cfg);

  json j;
  bool all_ok = true;
  for (const auto& r : results) {
    j[r.name] = {{"passed", r.passed}, {"skipped", r.skipped}, {"details", r.details}};
    const char* tag = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
    std::cout << "[" << tag << "] " << r.name << ": " << r.details << "\n";
    if (!r.skipped && !r.passed) all_ok = false;
  }
  const fs::path dir = ensure_out_dir(cfg);
  write_text_file((dir / "verify.json").string(), j.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation diagrams for nonlocal singular p-Laplacian problems"};
  app.require_subcommand(1);

  CommonArgs args;
  double alpha = 1.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "configuration file")->required();
    sub->add_option("--out", args.out_override, "output directory override");
    sub->add_option("--seed", args.seed, "seed for randomized suites");
    sub->add_option("--threads", args.threads, "worker threads for branch tracing");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the local problem at one alpha");
  add_common(solve);
  solve->add_option("--alpha", alpha, "parameter of the local problem")->required();
  CLI::App* eig = app.add_subcommand("eig", "first eigenpair of the weighted p-Laplacian");
  add_common(eig);
  CLI::App* tor = app.add_subcommand("torsion", "torsion-type function");
  add_common(tor);
  CLI::App* trace = app.add_subcommand("trace", "trace the bifurcation branch");
  add_common(trace);
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(args, alpha);
    if (eig->parsed()) return cmd_eig(args);
    if (tor->parsed()) return cmd_torsion(args);
    if (trace->parsed()) return cmd_trace(args);
    if (verify->parsed()) return cmd_verify(args);
  } catch (const validation_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
