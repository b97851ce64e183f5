#pragma once

// The solution map T(alpha) of the local problem
//   -Lap_p u = alpha * ( a u^{-delta} + b u^{beta} ),  u = 0 on the boundary,
// realized by the regularization ladder n = 2^k with warm starts, followed by
// a final Newton polish on the untruncated singular system so that the
// returned field satisfies the exact discrete residual to solver tolerance.
// Also the barrier sandwiches built from the first eigenfunction and the
// torsion function, with empirically located validity thresholds.

#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "plbranch/comparison.hpp"
#include "plbranch/field.hpp"
#include "plbranch/plap.hpp"
#include "plbranch/problem.hpp"
#include "plbranch/spectral.hpp"

namespace plbranch {

struct ladder_error : numerical_error {
  Field last, previous;  // the two deepest ladder iterates
  ladder_error(const std::string& msg, Field l, Field p)
      : numerical_error(msg), last(std::move(l)), previous(std::move(p)) {}
};

struct LadderOptions {
  double ladder_tol = 1e-6;  // sup gap between consecutive levels
  int max_doublings = 30;
  bool polish = true;        // final solve of the untruncated system
  SolverOptions newton;
};

struct LadderResult {
  Field u;
  SolveReport report;              // of the final (polished) solve
  std::vector<double> gaps;        // sup|u_{2n} - u_n| along the ladder
  int levels = 0;                  // number of rungs solved
  bool polished = false;
};

// Supersolution-shaped starting field: C * e^t with t = (p-1)/(p-1+delta)
// (the upper-barrier profile, whose boundary decay dominates the solution's)
// and the smallest power-of-two C making the field a discrete supersolution
// at this alpha. Approaching from above keeps the Newton iteration out of
// the region where the sublinear term destabilizes the linearization; a flat
// undersized start collapses there for large alpha.
inline Field supersolution_init(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                                const TorsionField& tor, double alpha) {
  if (tor.trivial) return make_field(std::move(mesh), 0.01);
  const double t = (spec.p - 1.0) / (spec.p - 1.0 + spec.delta);
  Field prof = tor.e_field;
  for (double& v : prof.values) v = std::pow(std::max(v, 0.0), t);

  const auto a = sample_potential(spec.a_fn, *mesh);
  const auto b = sample_potential(spec.b_fn, *mesh);
  auto dominates = [&](double c) {
    const Field u = scaled(prof, c);
    const Field lap = plap_apply(u, spec.p);
    for (int i = mesh->first_interior(); i <= mesh->last_interior(); ++i) {
      const double rhs = alpha * (a[i] * std::pow(u.values[i], -spec.delta) +
                                  b[i] * std::pow(u.values[i], spec.beta));
      if (lap.values[i] < rhs) return false;
    }
    return true;
  };

  // Seed at the homogeneity scale, then grow to dominance and trim back.
  double C = std::max(std::pow(alpha, 1.0 / (spec.p - 1.0 + spec.delta)),
                      std::pow(alpha, 1.0 / (spec.p - 1.0 - spec.beta)));
  for (int k = 0; k < 960 && C < 1e290 && !dominates(C); ++k) C *= 2.0;
  for (int k = 0; k < 960 && C > 1e-290 && dominates(0.5 * C); ++k) C *= 0.5;
  return scaled(prof, C);
}

inline Field ladder_initial_guess(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                                  double alpha) {
  const TorsionField tor = torsion(spec, mesh);
  return supersolution_init(spec, mesh, tor, alpha);
}

inline LadderResult run_ladder(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                               double alpha, const Field& init, const LadderOptions& opts = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("T: requires alpha > 0");
  LadderResult out;
  Field u = init;
  Field prev = init;
  bool settled = false;
  double n = 1.0;
  for (int k = 0; k <= opts.max_doublings; ++k, n *= 2.0) {
    auto [sol, rep] = solve_regularized(spec, mesh, alpha, n, u, opts.newton);
    if (!rep.converged)
      throw numerical_error("T: regularized solve failed to converge at ladder level n=" +
                            std::to_string(static_cast<long long>(n)));
    prev = std::move(u);
    u = std::move(sol);
    out.report = rep;
    ++out.levels;
    if (k > 0) {
      const double gap = max_abs_diff(u, prev);
      out.gaps.push_back(gap);
      if (gap <= opts.ladder_tol) {
        settled = true;
        break;
      }
    }
  }
  if (!settled)
    throw ladder_error("T: ladder did not settle within " +
                           std::to_string(opts.max_doublings) + " doublings",
                       u, prev);

  if (opts.polish && interior_min(u) > 0.0) {
    auto [pol, rep] = solve_singular_limit(spec, mesh, alpha, u, opts.newton);
    if (rep.converged) {
      out.u = std::move(pol);
      out.report = rep;
      out.polished = true;
      return out;
    }
  }
  out.u = std::move(u);
  return out;
}

// T with an LRU cache over alpha; instances are bound to one (spec, mesh)
// pair, which is what keys the cache in practice. Lookups and inserts are
// mutex-guarded so branch tracing may call solve() from several workers.
class LocalSolutionMap {
 public:
  LocalSolutionMap(ProblemSpec spec, std::shared_ptr<const Mesh> mesh,
                   LadderOptions opts = {}, std::size_t capacity = 256)
      : spec_(std::move(spec)), mesh_(std::move(mesh)), opts_(opts), capacity_(capacity) {}

  const ProblemSpec& spec() const { return spec_; }
  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  const LadderOptions& options() const { return opts_; }

  LadderResult solve(double alpha) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = index_.find(alpha); it != index_.end()) {
        order_.splice(order_.begin(), order_, it->second);
        return *it->second->second;
      }
    }
    Field init = warm_start(alpha);
    auto result = std::make_shared<LadderResult>(run_ladder(spec_, mesh_, alpha, init, opts_));
    std::lock_guard<std::mutex> lock(mu_);
    if (index_.find(alpha) == index_.end()) {
      order_.emplace_front(alpha, result);
      index_[alpha] = order_.begin();
      if (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
      }
    }
    return *result;
  }

  Field operator()(double alpha) const { return solve(alpha).u; }

 private:
  Field warm_start(double alpha) const {
    double alpha_hit = 0.0;
    std::shared_ptr<LadderResult> hit;
    {
      std::lock_guard<std::mutex> lock(mu_);
      // Nearest cached alpha in log distance.
      double best = 0.0;
      for (const auto& [al, res] : order_) {
        const double dist = std::abs(std::log(al) - std::log(alpha));
        if (!hit || dist < best) {
          best = dist;
          hit = res;
          alpha_hit = al;
        }
      }
    }
    if (hit && std::abs(std::log(alpha / alpha_hit)) < std::log(16.0)) {
      // Rescale so the start brackets the solution from above: the sup norm
      // of T grows with an exponent between 1/(p-1+delta) and 1/(p-1-beta).
      const double expo = alpha > alpha_hit ? 1.0 / (spec_.p - 1.0 - spec_.beta)
                                            : 1.0 / (spec_.p - 1.0 + spec_.delta);
      return scaled(hit->u, std::pow(alpha / alpha_hit, expo));
    }
    return supersolution_init(spec_, mesh_, torsion_profile(), alpha);
  }

  const TorsionField& torsion_profile() const {
    std::lock_guard<std::mutex> lock(tor_mu_);
    if (!tor_) tor_ = torsion(spec_, mesh_);
    return *tor_;
  }

  ProblemSpec spec_;
  std::shared_ptr<const Mesh> mesh_;
  LadderOptions opts_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::mutex tor_mu_;
  mutable std::list<std::pair<double, std::shared_ptr<LadderResult>>> order_;
  mutable std::map<double, decltype(order_)::iterator> index_;
  mutable std::optional<TorsionField> tor_;
};

// One-shot convenience; prefer a LocalSolutionMap when evaluating many alphas.
inline std::pair<Field, SolveReport> T(const ProblemSpec& spec,
                                       std::shared_ptr<const Mesh> mesh, double alpha,
                                       const LadderOptions& opts = {}) {
  auto res = run_ladder(spec, mesh, alpha, ladder_initial_guess(spec, mesh, alpha), opts);
  return {std::move(res.u), res.report};
}

enum class BarrierRegime { SmallAlpha, LargeAlpha };

struct BarrierSet {
  double alpha = 0.0;
  Field lower;   // alpha^q * Phi_1
  Field upper;   // alpha^l * e^t
  double q = 0.0, l = 0.0, t = 0.0;  // t = (p-1)/(p-1+delta)
  BarrierRegime regime = BarrierRegime::SmallAlpha;
  bool valid = false;        // both residual sign checks passed at this alpha
  bool window_ok = false;    // exponents lie in the regime's admissible window
  double alpha0 = 0.0;       // largest alpha passing the small-regime checks
  double alpha_inf = 0.0;    // smallest alpha passing the large-regime checks
};

namespace detail {

inline void barrier_exponent_defaults(const ProblemSpec& spec, BarrierRegime regime,
                                      double& q, double& l) {
  if (regime == BarrierRegime::SmallAlpha) {
    const double c = 1.0 / (spec.p - 1.0 + spec.delta);
    q = 1.5 * c;  // admissible window (c, inf)
    l = 0.5 * c;  // admissible window (0, c)
  } else {
    const double c = 1.0 / (spec.p - 1.0 - spec.beta);
    q = 0.5 * c;  // admissible window (0, c)
    l = 1.5 * c;  // admissible window (c, inf)
  }
}

inline bool barrier_window_ok(const ProblemSpec& spec, BarrierRegime regime, double q, double l) {
  if (regime == BarrierRegime::SmallAlpha) {
    const double c = 1.0 / (spec.p - 1.0 + spec.delta);
    return q > c && l < c && l > 0.0;
  }
  const double c = 1.0 / (spec.p - 1.0 - spec.beta);
  return q < c && q > 0.0 && l > c;
}

inline Field power_field(const Field& base, double expo, double scale) {
  Field out = base;
  for (double& v : out.values) v = scale * std::pow(std::max(v, 0.0), expo);
  return out;
}

// Residual sign checks of the candidate pair at one alpha.
inline bool barrier_signs_pass(const ProblemSpec& spec, const EigenPair& eig,
                               const TorsionField& tor, double alpha, double q, double l,
                               double t) {
  const Field lower = power_field(eig.phi1, 1.0, std::pow(alpha, q));
  const Field upper = power_field(tor.e_field, t, std::pow(alpha, l));
  if (interior_min(lower) <= 0.0 || interior_min(upper) <= 0.0) return false;
  const auto sub = classify_subsolution(lower, spec, alpha);
  if (!sub.is_sub) return false;
  const auto sup = classify_subsolution(upper, spec, alpha);
  if (!sup.is_super) return false;
  // Feasibility of the sandwich itself.
  for (int i = 0; i < lower.size(); ++i)
    if (lower.values[i] > upper.values[i] + 1e-12 * (1.0 + upper.values[i])) return false;
  return true;
}

// Log-bisection for the edge of the passing region. pass_below = true finds
// the largest passing alpha (small regime); otherwise the smallest.
inline double barrier_threshold(const ProblemSpec& spec, const EigenPair& eig,
                                const TorsionField& tor, double q, double l, double t,
                                bool pass_below) {
  auto passes = [&](double al) { return barrier_signs_pass(spec, eig, tor, al, q, l, t); };
  double good = 1.0, bad = 1.0;
  const double lo_cap = 1e-12, hi_cap = 1e12;
  if (pass_below) {
    if (passes(1.0)) {
      good = 1.0;
      bad = 4.0;
      while (bad < hi_cap && passes(bad)) { good = bad; bad *= 4.0; }
      if (bad >= hi_cap) return good;
    } else {
      bad = 1.0;
      good = 0.25;
      while (good > lo_cap && !passes(good)) { bad = good; good *= 0.25; }
      if (good <= lo_cap) return 0.0;
    }
  } else {
    if (passes(1.0)) {
      good = 1.0;
      bad = 0.25;
      while (bad > lo_cap && passes(bad)) { good = bad; bad *= 0.25; }
      if (bad <= lo_cap) return good;
    } else {
      bad = 1.0;
      good = 4.0;
      while (good < hi_cap && !passes(good)) { bad = good; good *= 4.0; }
      if (good >= hi_cap) return std::numeric_limits<double>::infinity();
    }
  }
  for (int it = 0; it < 48; ++it) {
    const double mid = std::sqrt(good * bad);
    (passes(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace detail

// Build the sandwich lower = alpha^q Phi_1, upper = alpha^l e^t and verify the
// residual signs at this alpha. Exponent overrides allow deliberately
// inadmissible windows; those are reported, not rejected.
inline BarrierSet barriers(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                           const EigenPair& eig, const TorsionField& tor, double alpha,
                           BarrierRegime regime, std::optional<double> q_override = {},
                           std::optional<double> l_override = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("barriers: requires alpha > 0");
  if (eig.phi1.mesh != mesh || tor.e_field.mesh != mesh)
    throw std::invalid_argument("barriers: eigenpair/torsion computed on a different mesh");

  BarrierSet bs;
  bs.alpha = alpha;
  bs.regime = regime;
  bs.t = (spec.p - 1.0) / (spec.p - 1.0 + spec.delta);
  detail::barrier_exponent_defaults(spec, regime, bs.q, bs.l);
  if (q_override) bs.q = *q_override;
  if (l_override) bs.l = *l_override;
  bs.window_ok = detail::barrier_window_ok(spec, regime, bs.q, bs.l);

  // Cap the exponents so the sandwich is feasible at the working alpha
  // (lower <= upper needs alpha^q sup Phi_1 <= alpha^l (sup e)^t). Only the
  // default choices are nudged, staying inside the admissible window.
  if (!q_override && !l_override) {
    const double sup_et = std::pow(std::max(sup_norm(tor.e_field), 0.0), bs.t);
    for (int tries = 0; tries < 8; ++tries) {
      if (std::pow(alpha, bs.q) * 1.0 <= std::pow(alpha, bs.l) * sup_et) break;
      if (regime == BarrierRegime::SmallAlpha && alpha < 1.0) {
        bs.q *= 1.5;
        bs.l *= 0.5;
      } else if (regime == BarrierRegime::LargeAlpha && alpha > 1.0) {
        bs.l *= 1.5;
        bs.q *= 0.5;
      } else {
        break;
      }
    }
  }

  bs.lower = detail::power_field(eig.phi1, 1.0, std::pow(alpha, bs.q));
  bs.upper = detail::power_field(tor.e_field, bs.t, std::pow(alpha, bs.l));
  bs.valid = bs.window_ok &&
             detail::barrier_signs_pass(spec, eig, tor, alpha, bs.q, bs.l, bs.t);

  // Empirical validity thresholds: each regime is probed with its own
  // exponents (the overridden ones when they belong to this regime).
  double qs, ls, ql, ll;
  detail::barrier_exponent_defaults(spec, BarrierRegime::SmallAlpha, qs, ls);
  detail::barrier_exponent_defaults(spec, BarrierRegime::LargeAlpha, ql, ll);
  if (regime == BarrierRegime::SmallAlpha) { qs = bs.q; ls = bs.l; }
  else { ql = bs.q; ll = bs.l; }
  bs.alpha0 = detail::barrier_threshold(spec, eig, tor, qs, ls, bs.t, true);
  bs.alpha_inf = detail::barrier_threshold(spec, eig, tor, ql, ll, bs.t, false);
  return bs;
}

inline bool check_membership(const Field& u, const BarrierSet& bars) {
  check_same_mesh(u, bars.lower);
  const double slack = 1e-8 + 1e-4 * sup_norm(u);
  for (int i = 0; i < u.size(); ++i) {
    if (u.values[i] < bars.lower.values[i] - slack) return false;
    if (u.values[i] > bars.upper.values[i] + slack) return false;
  }
  return true;
}

}  // namespace plbranch
