#pragma once

// The auxiliary pair behind the barrier construction: the first eigenpair of
//   -Lap_p u = lambda1 * H1(x) |u|^{p-2} u,   H1 = min{a,b},
// computed by normalized inverse iteration, and the torsion-type function
//   -Lap_p e = H2(x),                          H2 = max{a,b}.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "plbranch/field.hpp"
#include "plbranch/plap.hpp"
#include "plbranch/problem.hpp"

namespace plbranch {

// H1 = min{a,b} vanishes identically: the lower barrier of the sandwich
// degenerates and callers must fall back to torsion-only machinery.
struct zero_eigen_weight_error : numerical_error {
  using numerical_error::numerical_error;
};

struct EigenPair {
  double lambda1 = 0.0;
  Field phi1;       // sup-normalized, positive in the interior, 0 on the boundary
  Field weight_H1;
  int iterations = 0;
};

struct TorsionField {
  Field e_field;
  Field weight_H2;
  bool trivial = false;  // H2 identically zero
  SolveReport report;
};

inline Field min_potential_field(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh) {
  Field H = make_field(mesh);
  const auto a = sample_potential(spec.a_fn, *mesh);
  const auto b = sample_potential(spec.b_fn, *mesh);
  for (int i = 0; i < H.size(); ++i) H.values[i] = std::min(a[i], b[i]);
  return H;
}

inline Field max_potential_field(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh) {
  Field H = make_field(mesh);
  const auto a = sample_potential(spec.a_fn, *mesh);
  const auto b = sample_potential(spec.b_fn, *mesh);
  for (int i = 0; i < H.size(); ++i) H.values[i] = std::max(a[i], b[i]);
  return H;
}

// Discrete Rayleigh quotient  sum |Du|^p h / sum w H |u|^p  (interval cells;
// radial fluxes weighted by face areas through the quad weights' cell sizes).
inline double rayleigh_quotient(const Field& u, const Field& H, double p) {
  const Mesh& m = *u.mesh;
  double num = 0.0, den = 0.0;
  const double sigma = m.kind == MeshKind::RadialBall ? unit_sphere_area(m.dimension) : 1.0;
  for (int i = 0; i + 1 < m.num_nodes(); ++i) {
    const double du = (u.values[i + 1] - u.values[i]) / m.h;
    double face = m.h;
    if (m.kind == MeshKind::RadialBall)
      face = sigma * std::pow(m.nodes[i] + 0.5 * m.h, m.dimension - 1) * m.h;
    num += face * std::pow(std::abs(du), p);
  }
  for (int i = 0; i < m.num_nodes(); ++i)
    den += m.quad_weights[i] * H.values[i] * std::pow(std::abs(u.values[i]), p);
  return den > 0.0 ? num / den : 0.0;
}

struct EigenOptions {
  double lambda_rel_tol = 1e-8;
  double field_tol = 1e-9;  // extra sup-change requirement before stopping
  int max_iters = 500;
  SolverOptions inner;
};

// Normalized inverse iteration: solve -Lap_p w = lambda_hat H1 u^{p-1},
// renormalize sup w = 1, update lambda_hat <- lambda_hat * (sup w)^{1-p}.
// Started from the boundary-distance profile.
inline EigenPair first_eigenpair(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                                 const EigenOptions& opts = {}) {
  EigenPair out;
  out.weight_H1 = min_potential_field(spec, mesh);
  if (sup_norm(out.weight_H1) == 0.0)
    throw zero_eigen_weight_error(
        "H1 = min{a,b} vanishes identically; no weighted eigenpair exists. "
        "Supply overlapping positive a and b, or use torsion-only barriers.");

  const Mesh& m = *mesh;
  const double p = spec.p;

  Field u = make_field(mesh);
  for (int i = 0; i < u.size(); ++i) u.values[i] = m.boundary_distance[i];
  double s0 = sup_norm(u);
  for (double& v : u.values) v /= s0;

  double lambda = rayleigh_quotient(u, out.weight_H1, p);
  if (!(lambda > 0.0)) lambda = 1.0;

  std::vector<double> f(m.num_nodes(), 0.0);
  Field w = u;
  for (out.iterations = 1; out.iterations <= opts.max_iters; ++out.iterations) {
    for (int i = 0; i < m.num_nodes(); ++i)
      f[i] = m.is_boundary(i)
                 ? 0.0
                 : lambda * out.weight_H1.values[i] * std::pow(std::max(u.values[i], 0.0), p - 1.0);
    auto [sol, rep] = solve_fixed_rhs(mesh, p, f, w, opts.inner);
    if (!rep.converged)
      throw numerical_error("first_eigenpair: inner p-Laplace solve did not converge");
    w = sol;
    const double s = sup_norm(w);
    if (!(s > 0.0)) throw numerical_error("first_eigenpair: iterate collapsed to zero");
    const double lambda_next = lambda * std::pow(s, 1.0 - p);
    Field u_next = scaled(w, 1.0 / s);
    const double dl = std::abs(lambda_next - lambda) / lambda_next;
    const double du = max_abs_diff(u_next, u);
    lambda = lambda_next;
    u = std::move(u_next);
    if (dl < opts.lambda_rel_tol && du < opts.field_tol) break;
  }

  out.lambda1 = lambda;
  out.phi1 = std::move(u);
  return out;
}

inline TorsionField torsion(const ProblemSpec& spec, std::shared_ptr<const Mesh> mesh,
                            const SolverOptions& opts = {}) {
  TorsionField out;
  out.weight_H2 = max_potential_field(spec, mesh);
  out.e_field = make_field(mesh);
  if (sup_norm(out.weight_H2) == 0.0) {
    out.trivial = true;  // zero right-hand side: e = 0
    out.report.converged = true;
    return out;
  }
  std::vector<double> f(mesh->num_nodes(), 0.0);
  for (int i = 0; i < mesh->num_nodes(); ++i)
    if (!mesh->is_boundary(i)) f[i] = out.weight_H2.values[i];

  // Start from a positive bump scaled to the expected size.
  Field init = make_field(mesh);
  const double d0 = *std::max_element(mesh->boundary_distance.begin(),
                                      mesh->boundary_distance.end());
  for (int i = 0; i < init.size(); ++i) init.values[i] = mesh->boundary_distance[i] / d0;
  auto [sol, rep] = solve_fixed_rhs(mesh, spec.p, f, init, opts);
  if (!rep.converged) throw numerical_error("torsion: solve did not converge");
  out.e_field = std::move(sol);
  out.report = rep;
  return out;
}

}  // namespace plbranch
