// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "plbranch/config.hpp"
#include "plbranch/localmap.hpp"
#include "plbranch/nonlocal.hpp"
#include "plbranch/spectral.hpp"
#include "plbranch/verify.hpp"

using namespace plbranch;

namespace {

const std::string kConfigDir = PLBRANCH_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream note;
};

void expect(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.note << " [" << what << "]";
  }
}

RunConfig load(const std::string& name) { return parse_config_file(kConfigDir + name); }

BranchTracer make_tracer(const RunConfig& cfg, int mesh_mult = 1) {
  const ProblemSpec spec = build_spec(cfg);
  RunConfig mcfg = cfg;
  mcfg.mesh_M = cfg.mesh_M * mesh_mult;
  auto mesh = build_mesh(mcfg);
  validate_spec(spec, *mesh);
  TraceOptions topts;
  topts.ladder.ladder_tol = cfg.ladder_tol;
  topts.ladder.newton.tol = cfg.newton_tol;
  return BranchTracer(spec, mesh, topts);
}

// ---- criterion 1: torsion solver vs closed form --------------------------

Outcome criterion_torsion_oracle() {
  Outcome o;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto mesh = build_interval(0.0, 1.0, 512);
    ProblemSpec spec;
    spec.p = p;
    spec.delta = 1.0;
    spec.beta = 0.4 * (p - 1.0);
    spec.a_fn = [](double) { return 1.0; };
    spec.b_fn = [](double) { return 1.0; };
    spec.g_fn = [](double, double) { return 1.0; };
    const TorsionField tor = torsion(spec, mesh);
    double err = 0.0;
    for (int i = 0; i < tor.e_field.size(); ++i)
      err = std::max(err, std::abs(tor.e_field.values[i] -
                                   oracles::torsion_exact(p, mesh->nodes[i])));
    const double secs = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    o.note << "p=" << p << ": err=" << err << " (" << secs << "s)  ";
    expect(o, err <= 1e-3, "sup error above 1e-3");
    expect(o, secs <= 10.0, "runtime above 10s");
  }
  return o;
}

// ---- criterion 2: eigenpair vs separation of variables --------------------

Outcome criterion_eigenpair_oracle() {
  Outcome o;
  auto mesh = build_interval(0.0, 1.0, 256);
  ProblemSpec spec;
  spec.p = 2.0;
  spec.delta = 1.0;
  spec.beta = 0.5;
  spec.a_fn = [](double) { return 1.0; };
  spec.b_fn = [](double) { return 1.0; };
  spec.g_fn = [](double, double) { return 1.0; };
  const EigenPair eig = first_eigenpair(spec, mesh);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  double ferr = 0.0;
  for (int i = 0; i < eig.phi1.size(); ++i)
    ferr = std::max(ferr, std::abs(eig.phi1.values[i] -
                                   std::sin(std::numbers::pi * mesh->nodes[i])));
  o.note << "lambda1=" << eig.lambda1 << " (pi^2=" << pi2 << "), sup phi err=" << ferr;
  expect(o, std::abs(eig.lambda1 - pi2) / pi2 <= 0.005, "lambda1 off by more than 0.5%");
  expect(o, ferr <= 1e-3, "eigenfunction off by more than 1e-3");
  return o;
}

// ---- criterion 3: scaling-law recovery ------------------------------------

Outcome criterion_scaling_laws() {
  Outcome o;
  for (const auto& [name, kind, theta] :
       {std::tuple{"scaling_b0.cfg", +1, 0.5}, std::tuple{"scaling_a0.cfg", -1, 0.4}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = load(name);
    const ProblemSpec spec = build_spec(cfg);
    auto mesh = build_mesh(cfg);
    validate_spec(spec, *mesh);
    LadderOptions lopts;
    lopts.ladder_tol = cfg.ladder_tol;
    lopts.newton.tol = cfg.newton_tol;
    LocalSolutionMap map(spec, mesh, lopts);
    const SuiteResult res = scaling_suite(map, kind, theta, cfg.alpha_min, cfg.alpha_max, 24);
    const double secs = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    o.note << name << ": " << res.details << " (" << secs << "s)  ";
    expect(o, res.passed, std::string(name) + " slope mismatch");
    expect(o, secs <= 120.0, "sweep runtime above 2 min");
  }
  return o;
}

// ---- criterion 4: four-diagram reproduction -------------------------------

CaseLabel trace_label(const RunConfig& cfg, int mesh_mult, int k_mult) {
  BranchTracer tracer = make_tracer(cfg, mesh_mult);
  Branch br = tracer.trace_branch(cfg.alpha_min, cfg.alpha_max, cfg.sweep_K * k_mult);
  return classify(br);
}

Outcome criterion_four_diagrams() {
  Outcome o;
  const std::pair<std::string, CaseLabel> cases[] = {
      {"case1a.cfg", CaseLabel::Case1a},
      {"case1b.cfg", CaseLabel::Case1b},
      {"case2a.cfg", CaseLabel::Case2a},
      {"case2b.cfg", CaseLabel::Case2b},
  };
  for (const auto& [name, expected] : cases) {
    const RunConfig cfg = load(name);
    const CaseLabel base = trace_label(cfg, 1, 1);
    const CaseLabel fine_mesh = trace_label(cfg, 2, 1);
    const CaseLabel fine_grid = trace_label(cfg, 1, 2);
    o.note << name << ": " << to_string(base) << "/" << to_string(fine_mesh) << "/"
           << to_string(fine_grid) << "  ";
    expect(o, base == expected, name + std::string(" misclassified"));
    expect(o, fine_mesh == expected, name + std::string(" unstable under mesh doubling"));
    expect(o, fine_grid == expected, name + std::string(" unstable under grid doubling"));
  }
  return o;
}

// ---- criterion 5 and 8: multiplicity counts and the solution identity -----

double nonlocal_identity_defect(const BranchTracer& tracer, double alpha, double lambda) {
  const ProblemSpec& spec = tracer.spec();
  const Mesh& mesh = tracer.mesh();
  const Field u = tracer.local_map()(alpha);
  const double G = eval_G(spec, mesh, u);
  const Field lap = plap_apply(u, spec.p);
  const auto a = sample_potential(spec.a_fn, mesh);
  const auto b = sample_potential(spec.b_fn, mesh);
  double worst = 0.0;
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i) {
    const double rhs = lambda * (a[i] * std::pow(u.values[i], -spec.delta) +
                                 b[i] * std::pow(u.values[i], spec.beta));
    worst = std::max(worst, std::abs(G * lap.values[i] - rhs));
  }
  return worst;
}

struct MultiplicityCheck {
  Outcome counts;
  Outcome identity;
};

MultiplicityCheck criterion_multiplicity() {
  MultiplicityCheck mc;

  {  // Case 1b: two solutions below lambda*, none above.
    const RunConfig cfg = load("case1b.cfg");
    BranchTracer tracer = make_tracer(cfg);
    Branch br = tracer.trace_branch(cfg.alpha_min, cfg.alpha_max, cfg.sweep_K);
    br.case_label = classify(br);
    expect(mc.counts, br.case_label == CaseLabel::Case1b, "case1b misclassified");
    if (br.case_label == CaseLabel::Case1b) {
      const double lstar = tracer.find_lambda_star(br);
      mc.counts.note << "1b lambda*=" << lstar << " counts:";
      for (int k = 0; k < 5; ++k) {
        const double lambda = lstar * (0.1 + 0.2 * k);
        const auto roots = tracer.invert_H(br, lambda);
        mc.counts.note << " " << roots.size();
        expect(mc.counts, roots.size() == 2, "case1b expected 2 preimages");
        for (double alpha : roots) {
          const double defect = nonlocal_identity_defect(tracer, alpha, lambda);
          expect(mc.identity, defect <= 1e-6 * lambda, "identity defect above 1e-6*lambda");
        }
      }
      expect(mc.counts, tracer.invert_H(br, 2.0 * lstar).empty(),
             "case1b expected no preimages above lambda*");
    }
  }

  {  // Case 2a: two solutions above lambda*, none below.
    const RunConfig cfg = load("case2a.cfg");
    BranchTracer tracer = make_tracer(cfg);
    Branch br = tracer.trace_branch(cfg.alpha_min, cfg.alpha_max, cfg.sweep_K);
    br.case_label = classify(br);
    expect(mc.counts, br.case_label == CaseLabel::Case2a, "case2a misclassified");
    if (br.case_label == CaseLabel::Case2a) {
      const double lstar = tracer.find_lambda_star(br);
      mc.counts.note << "  2a lambda*=" << lstar << " counts:";
      for (int k = 0; k < 5; ++k) {
        const double lambda = lstar * 1.1 * std::pow(10.0 / 1.1, k / 4.0);
        const auto roots = tracer.invert_H(br, lambda);
        mc.counts.note << " " << roots.size();
        expect(mc.counts, roots.size() == 2, "case2a expected 2 preimages");
        for (double alpha : roots) {
          const double defect = nonlocal_identity_defect(tracer, alpha, lambda);
          expect(mc.identity, defect <= 1e-6 * lambda, "identity defect above 1e-6*lambda");
        }
      }
      expect(mc.counts, tracer.invert_H(br, 0.5 * lstar).empty(),
             "case2a expected no preimages below lambda*");
    }
  }
  if (mc.identity.pass) mc.identity.note << "all inverted pairs within 1e-6*lambda";
  return mc;
}

// ---- criterion 6: monotonicity and sandwich suites ------------------------

Outcome criterion_monotonicity_sandwich() {
  Outcome o;
  const RunConfig cfg = load("default.cfg");
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);
  LadderOptions lopts;
  lopts.ladder_tol = cfg.ladder_tol;
  lopts.newton.tol = cfg.newton_tol;
  LocalSolutionMap map(spec, mesh, lopts);
  const SuiteResult mono = monotonicity_suite(map, cfg.alpha_min, cfg.alpha_max, 24);
  o.note << mono.details << "; ";
  expect(o, mono.passed, "monotonicity violations");
  const SuiteResult sand = sandwich_suite(map);
  o.note << sand.details;
  expect(o, sand.passed && !sand.skipped, "sandwich violations");
  return o;
}

// ---- criterion 7: comparison no-counterexample suite ----------------------

Outcome criterion_comparison() {
  Outcome o;
  const RunConfig cfg = load("default.cfg");
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);
  LocalSolutionMap map(spec, mesh);
  const SuiteResult res = comparison_suite(map, 1.0, cfg.seed, 100);
  o.note << res.details;
  expect(o, res.passed, "comparison counterexample");
  return o;
}

// ---- criterion 9: ladder convergence in every catalogue config ------------

Outcome criterion_ladder_convergence() {
  Outcome o;
  const char* names[] = {"default.cfg",  "case1a.cfg",     "case1b.cfg", "case2a.cfg",
                         "case2b.cfg",   "scaling_b0.cfg", "scaling_a0.cfg"};
  for (const char* name : names) {
    const RunConfig cfg = load(name);
    const ProblemSpec spec = build_spec(cfg);
    auto mesh = build_mesh(cfg);
    validate_spec(spec, *mesh);
    LadderOptions lopts;
    lopts.ladder_tol = 1e-9;  // deep ladder so several gaps are observable
    const auto res = run_ladder(spec, mesh, 1.0, ladder_initial_guess(spec, mesh, 1.0), lopts);
    bool mono = res.gaps.size() >= 4;
    for (size_t k = 3; k < res.gaps.size(); ++k)
      if (res.gaps[k] > res.gaps[k - 1] * (1.0 + 1e-9)) mono = false;
    o.note << name << ":" << res.gaps.size() << " gaps ";
    expect(o, mono, std::string(name) + " ladder gaps not monotone");
  }
  return o;
}

int g_failures = 0;

void report(int index, const std::string& name, const Outcome& o) {
  std::printf("[%s] criterion %d: %s — %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(),
              o.note.str().c_str());
  if (!o.pass) ++g_failures;
}

}  // namespace

int main() {
  report(1, "torsion solver vs closed form (p = 1.5, 2, 3)", criterion_torsion_oracle());
  report(2, "first eigenpair vs separation of variables", criterion_eigenpair_oracle());
  report(3, "scaling-law recovery in the pure cases", criterion_scaling_laws());
  report(4, "four-diagram reproduction, stable under refinement", criterion_four_diagrams());
  const MultiplicityCheck mc = criterion_multiplicity();
  report(5, "multiplicity counts around lambda*", mc.counts);
  report(6, "monotonicity and sandwich suites", criterion_monotonicity_sandwich());
  report(7, "comparison no-counterexample suite", criterion_comparison());
  report(8, "nonlocal solution identity for inverted pairs", mc.identity);
  report(9, "ladder convergence in every catalogue config", criterion_ladder_convergence());
  return g_failures;
}
