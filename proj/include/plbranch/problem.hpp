#pragma once

// Problem data for the singular quasilinear family
//
//   -Lap_p u = alpha * ( a(x) u^{-delta} + b(x) u^{beta} )
//
// and its nonlocal wrapper with kernel g and exponent r. Asymptotic exponents
// theta1 (t -> infinity) and theta2 (t -> 0+) describe the kernel through
// g(x,t) t^theta -> f(x) > 0; when declared they are validated against the
// supplied kernel on a sampled t-grid rather than trusted.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "plbranch/field.hpp"
#include "plbranch/mesh.hpp"

namespace plbranch {

// Invalid problem data / configuration (CLI exit code 2).
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A solver or continuation step failed numerically (CLI exit code 3).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ScalarFn = std::function<double(double)>;        // of position
using KernelFn = std::function<double(double, double)>;  // of (position, t)

struct ProblemSpec {
  double p = 2.0;
  double delta = 1.0;   // singular exponent, > 0
  double beta = 0.5;    // sublinear exponent, 0 < beta < p-1
  double r = 0.0;       // nonlocal exponent
  ScalarFn a_fn;        // nonnegative potential on the singular term
  ScalarFn b_fn;        // nonnegative potential on the sublinear term
  KernelFn g_fn;        // kernel g(x,t) > 0 for t > 0
  std::optional<double> theta1;  // g(x,t) t^theta1 -> f1(x) as t -> inf
  std::optional<double> theta2;  // g(x,t) t^theta2 -> f2(x) as t -> 0+
  ScalarFn f1_fn;       // asymptotic coefficients; default: constant 1
  ScalarFn f2_fn;
  double asymptote_tol = 0.25;  // relative slack for kernel-limit validation
};

inline double eval_f1(const ProblemSpec& s, double x) { return s.f1_fn ? s.f1_fn(x) : 1.0; }
inline double eval_f2(const ProblemSpec& s, double x) { return s.f2_fn ? s.f2_fn(x) : 1.0; }

// Nodal samples of a potential; boundary nodes are skipped (potentials may
// blow up where d(x)=0 and are never used there).
inline std::vector<double> sample_potential(const ScalarFn& fn, const Mesh& mesh) {
  std::vector<double> v(mesh.num_nodes(), 0.0);
  if (!fn) return v;
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (!mesh.is_boundary(i)) v[i] = fn(mesh.nodes[i]);
  return v;
}

inline void validate_spec(const ProblemSpec& s, const Mesh& mesh) {
  if (!(s.p > 1.0)) throw validation_error("p must satisfy p > 1");
  if (mesh.kind == MeshKind::RadialBall && !(s.p < mesh.dimension))
    throw validation_error("p must satisfy p < N on a radial ball");
  if (!(s.delta > 0.0)) throw validation_error("delta must satisfy delta > 0");
  if (!(s.beta > 0.0 && s.beta < s.p - 1.0))
    throw validation_error("beta must satisfy 0 < beta < p-1");
  if (!s.a_fn || !s.b_fn) throw validation_error("potentials a and b are required");
  if (!s.g_fn) throw validation_error("kernel g is required");

  const auto a = sample_potential(s.a_fn, mesh);
  const auto b = sample_potential(s.b_fn, mesh);
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i) {
    if (a[i] < 0.0 || b[i] < 0.0)
      throw validation_error("potentials a and b must be nonnegative");
    if (!(a[i] + b[i] > 0.0))
      throw validation_error("uniqueness requires a + b > 0 at every interior node");
  }

  // Kernel-limit checks at a few interior positions.
  const double xs[3] = {mesh.nodes[mesh.first_interior()],
                        mesh.nodes[(mesh.first_interior() + mesh.last_interior()) / 2],
                        mesh.nodes[mesh.last_interior()]};
  auto check_limit = [&](double theta, const char* side, bool at_zero, const ScalarFn& f) {
    const double t = at_zero ? 1e-8 : 1e8;
    for (double x : xs) {
      const double fx = f ? f(x) : 1.0;
      if (!(fx > 0.0)) throw validation_error(std::string("asymptotic coefficient ") +
                                              side + " must be positive");
      const double ratio = s.g_fn(x, t) * std::pow(t, theta) / fx;
      if (!std::isfinite(ratio) || std::abs(ratio - 1.0) > s.asymptote_tol)
        throw validation_error(std::string("kernel does not match declared exponent ") + side);
    }
  };
  if (s.theta1) check_limit(*s.theta1, "theta1", false, s.f1_fn);
  if (s.theta2) check_limit(*s.theta2, "theta2", true, s.f2_fn);
}

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // sup-norm of the discrete residual
  bool converged = false;
  int damping_events = 0;       // Newton steps accepted with a shortened step
  int floor_activations = 0;    // nodes clamped by the positivity projection
  double tol_effective = 0.0;   // tolerance actually enforced (>= tol when the
                                // residual's roundoff floor dominates)
};

}  // namespace plbranch
