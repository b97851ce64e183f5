#pragma once

// Discrete harness for the comparison principle: classify fields as sub- or
// supersolutions of the local problem at a given alpha by the sign of the
// interior residual
//   R = -Lap_p u - alpha * ( a u^{-delta} + b u^{beta} ),
// then assert the ordering conclusion sub <= super.

#include <cmath>
#include <stdexcept>
#include <string>

#include "plbranch/field.hpp"
#include "plbranch/plap.hpp"
#include "plbranch/problem.hpp"

namespace plbranch {

struct SubSuperVerdict {
  bool is_sub = false;    // max interior R <= sign_tol
  bool is_super = false;  // min interior R >= -sign_tol
  double sign_tol = 0.0;
  double max_residual = 0.0;      // most positive interior residual
  double min_residual = 0.0;      // most negative interior residual
  double worst_violation = 0.0;   // <= 0 iff both flags hold
  int violation_node = -1;
};

inline SubSuperVerdict classify_subsolution(const Field& u, const ProblemSpec& spec,
                                            double alpha) {
  const Mesh& mesh = *u.mesh;
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i)
    if (!(u.values[i] > 0.0))
      throw std::invalid_argument(
          "classify_subsolution: field must be strictly positive at interior nodes");

  const Field lap = plap_apply(u, spec.p);
  const auto a = sample_potential(spec.a_fn, mesh);
  const auto b = sample_potential(spec.b_fn, mesh);

  SubSuperVerdict v;
  v.sign_tol = 1e-8 * (1.0 + alpha);
  v.max_residual = -std::numeric_limits<double>::infinity();
  v.min_residual = std::numeric_limits<double>::infinity();
  int argmax = -1, argmin = -1;
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i) {
    const double rhs = alpha * (a[i] * std::pow(u.values[i], -spec.delta) +
                                b[i] * std::pow(u.values[i], spec.beta));
    if (!std::isfinite(rhs))
      throw numerical_error("classify_subsolution: non-finite right-hand side at node " +
                            std::to_string(i));
    const double R = lap.values[i] - rhs;
    if (R > v.max_residual) { v.max_residual = R; argmax = i; }
    if (R < v.min_residual) { v.min_residual = R; argmin = i; }
  }
  v.is_sub = v.max_residual <= v.sign_tol;
  v.is_super = v.min_residual >= -v.sign_tol;
  const double sub_excess = v.max_residual - v.sign_tol;
  const double super_excess = -v.min_residual - v.sign_tol;
  v.worst_violation = std::max(sub_excess, super_excess);
  v.violation_node = sub_excess >= super_excess ? argmax : argmin;
  return v;
}

struct ComparisonReport {
  bool ordered = false;
  int violating_node = -1;
  double worst_gap = 0.0;  // max of (sub - super) beyond slack
  double slack = 0.0;
  explicit operator bool() const { return ordered; }
};

// Ordering conclusion of the comparison principle. Precondition failures
// (inputs that do not classify, nonzero boundary trace of the subsolution,
// a+b = 0 somewhere) throw; a false return on admissible inputs signals a
// solver or discretization defect.
inline ComparisonReport assert_comparison(const Field& sub, const Field& super,
                                          const ProblemSpec& spec, double alpha) {
  check_same_mesh(sub, super);
  const Mesh& mesh = *sub.mesh;

  const auto vs = classify_subsolution(sub, spec, alpha);
  if (!vs.is_sub)
    throw std::invalid_argument("assert_comparison: first field is not a subsolution (worst " +
                                std::to_string(vs.max_residual) + " at node " +
                                std::to_string(vs.violation_node) + ")");
  const auto vp = classify_subsolution(super, spec, alpha);
  if (!vp.is_super)
    throw std::invalid_argument("assert_comparison: second field is not a supersolution");
  for (int i = 0; i < sub.size(); ++i)
    if (mesh.is_boundary(i) && std::abs(sub.values[i]) > 1e-14)
      throw std::invalid_argument("assert_comparison: subsolution must vanish on the boundary");
  const auto a = sample_potential(spec.a_fn, mesh);
  const auto b = sample_potential(spec.b_fn, mesh);
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i)
    if (!(a[i] + b[i] > 0.0))
      throw std::invalid_argument("assert_comparison: requires a + b > 0");

  ComparisonReport rep;
  rep.slack = 1e-8 + 1e-4 * std::max(sup_norm(sub), sup_norm(super));
  rep.ordered = true;
  for (int i = 0; i < sub.size(); ++i) {
    const double gap = sub.values[i] - super.values[i] - rep.slack;
    if (gap > rep.worst_gap) {
      rep.worst_gap = gap;
      rep.violating_node = i;
      rep.ordered = false;
    }
  }
  return rep;
}

}  // namespace plbranch
