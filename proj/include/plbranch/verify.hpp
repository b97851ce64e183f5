#pragma once

// Bundled invariant suites behind the `verify` subcommand: monotonicity of
// T(alpha), barrier sandwiches inside their empirical validity windows, the
// randomized comparison-principle search, scaling-law slopes for the pure
// cases, and stability of the diagram classification under grid refinement.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "plbranch/comparison.hpp"
#include "plbranch/config.hpp"
#include "plbranch/localmap.hpp"
#include "plbranch/nonlocal.hpp"
#include "plbranch/spectral.hpp"

namespace plbranch {

struct SuiteResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string details;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int K) {
  std::vector<double> g(K);
  for (int i = 0; i < K; ++i)
    g[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (K - 1));
  return g;
}

// Smooth profile in [0.05, 1] built from a few random Fourier modes.
inline Field random_profile(std::shared_ptr<const Mesh> mesh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double c[4];
  for (double& v : c) v = unif(rng);
  const double x0 = mesh->nodes.front(), x1 = mesh->nodes.back();
  Field psi = make_field_from(mesh, [&](double x) {
    const double s = (x - x0) / (x1 - x0);
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += c[k] / (k + 1.0) * std::sin((k + 1.0) * std::numbers::pi * s);
    return v;
  });
  double lo = psi.values[0], hi = psi.values[0];
  for (double v : psi.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
  const double span = hi - lo > 0 ? hi - lo : 1.0;
  for (double& v : psi.values) v = 0.05 + 0.95 * (v - lo) / span;
  return psi;
}

inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline SuiteResult monotonicity_suite(const LocalSolutionMap& map, double alpha_min,
                                      double alpha_max, int K = 24) {
  SuiteResult res{"monotonicity"};
  const auto grid = detail::log_grid(alpha_min, alpha_max, K);
  Field prev;
  double prev_mid_min = 0.0;
  int violations = 0;
  double worst = 0.0;
  const Mesh& mesh = *map.mesh();
  const int q1 = mesh.num_nodes() / 4, q3 = 3 * mesh.num_nodes() / 4;
  for (int k = 0; k < K; ++k) {
    Field u = map(grid[k]);
    double mid_min = std::numeric_limits<double>::infinity();
    for (int i = q1; i <= q3; ++i) mid_min = std::min(mid_min, u.values[i]);
    if (!(mid_min > 0.0)) ++violations;
    if (k > 0) {
      const double slack = map.options().ladder_tol * (1.0 + sup_norm(u)) + 1e-12;
      for (int i = 0; i < u.size(); ++i) {
        const double drop = prev.values[i] - u.values[i] - slack;
        if (drop > 0.0) {
          ++violations;
          worst = std::max(worst, drop);
        }
      }
      if (mid_min < prev_mid_min - map.options().ladder_tol) ++violations;
    }
    prev = std::move(u);
    prev_mid_min = mid_min;
  }
  res.passed = violations == 0;
  std::ostringstream os;
  os << K << " alphas in [" << alpha_min << ", " << alpha_max << "], violations=" << violations;
  if (violations) os << ", worst drop=" << worst;
  res.details = os.str();
  return res;
}

inline SuiteResult sandwich_suite(const LocalSolutionMap& map,
                                  std::optional<double> q_override = {},
                                  std::optional<double> l_override = {}) {
  SuiteResult res{"sandwich"};
  const ProblemSpec& spec = map.spec();
  auto mesh = map.mesh();
  EigenPair eig;
  try {
    eig = first_eigenpair(spec, mesh);
  } catch (const zero_eigen_weight_error&) {
    res.skipped = true;
    res.details = "H1 = min{a,b} vanishes; barrier sandwich unavailable";
    return res;
  }
  TorsionField tor = torsion(spec, mesh);

  const BarrierSet probe = barriers(spec, mesh, eig, tor, 1.0, BarrierRegime::SmallAlpha,
                                    q_override, l_override);
  int checked = 0, failures = 0;
  std::ostringstream os;
  os << "alpha0=" << probe.alpha0 << ", alpha_inf=" << probe.alpha_inf;
  if (probe.alpha0 > 0.0) {
    for (double f : {0.5, 0.1, 0.02, 0.004}) {
      const double alpha = probe.alpha0 * f;
      const BarrierSet bs = barriers(spec, mesh, eig, tor, alpha, BarrierRegime::SmallAlpha,
                                     q_override, l_override);
      ++checked;
      if (!bs.valid || !check_membership(map(alpha), bs)) ++failures;
    }
  } else {
    ++failures;  // no validity window at all
  }
  if (std::isfinite(probe.alpha_inf)) {
    for (double f : {2.0, 10.0, 50.0, 250.0}) {
      const double alpha = std::min(probe.alpha_inf * f, 1e7);
      const BarrierSet bs = barriers(spec, mesh, eig, tor, alpha, BarrierRegime::LargeAlpha,
                                     q_override, l_override);
      ++checked;
      if (!bs.valid || !check_membership(map(alpha), bs)) ++failures;
    }
  } else {
    ++failures;
  }
  res.passed = failures == 0;
  os << ", checked=" << checked << ", failures=" << failures;
  res.details = os.str();
  return res;
}

inline SuiteResult comparison_suite(const LocalSolutionMap& map, double alpha,
                                    unsigned long seed, int profiles = 100) {
  SuiteResult res{"comparison"};
  const ProblemSpec& spec = map.spec();
  Field base = map(alpha);
  std::mt19937_64 rng(seed);
  std::vector<Field> subs, supers;
  int classified = 0;
  for (int k = 0; k < profiles; ++k) {
    Field psi = detail::random_profile(map.mesh(), rng);
    Field lo = base, hi = base;
    for (int i = 0; i < base.size(); ++i) {
      lo.values[i] *= 1.0 - 0.1 * psi.values[i];
      hi.values[i] *= 1.0 + 0.1 * psi.values[i];
    }
    const auto vlo = classify_subsolution(lo, spec, alpha);
    const auto vhi = classify_subsolution(hi, spec, alpha);
    if (vlo.is_sub && vhi.is_super) {
      ++classified;
      if (!assert_comparison(lo, hi, spec, alpha).ordered) {
        res.passed = false;
        res.details = "ordering violated for a classified pair";
        return res;
      }
      subs.push_back(std::move(lo));
      supers.push_back(std::move(hi));
    }
  }
  // Cross pairs between independently classified sub/supersolutions.
  int cross = 0;
  for (const auto& s : subs)
    for (const auto& S : supers) {
      if (!assert_comparison(s, S, spec, alpha).ordered) {
        res.passed = false;
        res.details = "ordering violated for a cross pair";
        return res;
      }
      ++cross;
    }
  // The solution itself classifies both ways and orders against everything.
  const auto vb = classify_subsolution(base, spec, alpha);
  if (!(vb.is_sub && vb.is_super)) {
    res.passed = false;
    res.details = "T(alpha) does not classify as a discrete solution";
    return res;
  }
  res.passed = true;
  std::ostringstream os;
  os << profiles << " profiles, " << classified << " classified pairs, " << cross
     << " cross checks, no counterexample";
  res.details = os.str();
  return res;
}

// Pure-case scaling laws. kind: +1 for b == 0 (exponent 1/(p-1+delta)),
// -1 for a == 0 (exponent 1/(p-1-beta)), 0 to skip.
inline SuiteResult scaling_suite(const LocalSolutionMap& map, int kind, double theta,
                                 double alpha_min, double alpha_max, int K = 24) {
  SuiteResult res{"scaling"};
  if (kind == 0) {
    res.skipped = true;
    res.details = "not a pure case with a power kernel";
    return res;
  }
  const ProblemSpec& spec = map.spec();
  const double s_expected = kind > 0 ? 1.0 / (spec.p - 1.0 + spec.delta)
                                     : 1.0 / (spec.p - 1.0 - spec.beta);
  const double h_expected = 1.0 - theta * spec.r * s_expected;

  const auto grid = detail::log_grid(alpha_min, alpha_max, K);
  std::vector<double> sups, hs;
  for (double alpha : grid) {
    const Field u = map(alpha);
    sups.push_back(sup_norm(u));
    const double gi = integrate_kernel(spec, *map.mesh(), u);
    hs.push_back(alpha * (spec.r == 0.0 ? 1.0 : std::pow(gi, spec.r)));
  }
  const double s_fit = detail::fit_loglog_slope(grid, sups);
  const double h_fit = detail::fit_loglog_slope(grid, hs);
  res.passed = std::abs(s_fit - s_expected) <= 1e-2 && std::abs(h_fit - h_expected) <= 1e-2;
  std::ostringstream os;
  os << "sup-norm slope " << s_fit << " (analytic " << s_expected << "), H slope " << h_fit
     << " (analytic " << h_expected << ")";
  res.details = os.str();
  return res;
}

inline SuiteResult classification_stability_suite(const ProblemSpec& spec, const RunConfig& cfg) {
  SuiteResult res{"classification-stability"};
  auto label_for = [&](int M, int K) {
    auto mesh = cfg.mesh_kind == "interval" ? build_interval(cfg.mesh_a, cfg.mesh_b, M)
                                            : build_radial(cfg.mesh_R, cfg.mesh_N, M);
    TraceOptions topts;
    topts.threads = cfg.threads;
    topts.ladder.ladder_tol = cfg.ladder_tol;
    topts.ladder.newton.tol = cfg.newton_tol;
    BranchTracer tracer(spec, mesh, topts);
    Branch br = tracer.trace_branch(cfg.alpha_min, cfg.alpha_max, K);
    br.case_label = classify(br);
    return br.case_label;
  };
  const CaseLabel base = label_for(cfg.mesh_M, cfg.sweep_K);
  const CaseLabel finer_grid = label_for(cfg.mesh_M, 2 * cfg.sweep_K);
  const CaseLabel finer_mesh = label_for(2 * cfg.mesh_M, cfg.sweep_K);
  res.passed = base == finer_grid && base == finer_mesh;
  res.details = "label " + to_string(base) + ", 2K -> " + to_string(finer_grid) +
                ", 2M -> " + to_string(finer_mesh);
  return res;
}

// Assemble and run everything for one configuration.
inline std::vector<SuiteResult> run_verification(const RunConfig& cfg) {
  const ProblemSpec spec = build_spec(cfg);
  auto mesh = build_mesh(cfg);
  validate_spec(spec, *mesh);

  LadderOptions lopts;
  lopts.ladder_tol = cfg.ladder_tol;
  lopts.newton.tol = cfg.newton_tol;
  LocalSolutionMap map(spec, mesh, lopts);

  // Pure-case detection for the scaling suite.
  int kind = 0;
  double theta = 0.0;
  {
    const auto a = sample_potential(spec.a_fn, *mesh);
    const auto b = sample_potential(spec.b_fn, *mesh);
    double amax = 0.0, bmax = 0.0;
    for (int i = 0; i < mesh->num_nodes(); ++i) {
      amax = std::max(amax, a[i]);
      bmax = std::max(bmax, b[i]);
    }
    const bool power_kernel = cfg.kernel_name.rfind("power:", 0) == 0;
    if (power_kernel && spec.theta1) {
      theta = *spec.theta1;
      if (bmax == 0.0) kind = +1;
      else if (amax == 0.0) kind = -1;
    }
  }

  std::vector<SuiteResult> out;
  out.push_back(monotonicity_suite(map, cfg.alpha_min, cfg.alpha_max));
  out.push_back(sandwich_suite(map, cfg.barrier_q, cfg.barrier_l));
  out.push_back(comparison_suite(map, std::sqrt(cfg.alpha_min * cfg.alpha_max), cfg.seed));
  out.push_back(scaling_suite(map, kind, theta, cfg.alpha_min, cfg.alpha_max));
  out.push_back(classification_stability_suite(spec, cfg));
  return out;
}

}  // namespace plbranch
