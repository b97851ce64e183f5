#pragma once

// Discrete p-Laplacian in conservative flux form and the damped Newton
// solver shared by every nonlinear solve in the library.
//
// Interior node i:
//   (-Lap_p u)_i = -( A+_i * phi(Du_{i+1/2}) - A-_i * phi(Du_{i-1/2}) )
// with Du_{i+1/2} = (u_{i+1}-u_i)/h and phi(s) = |s|^{p-2} s. On an interval
// A+ = A- = 1/h. On a radial ball fluxes carry the r^{N-1} face area and the
// divergence is normalized by the exact cell measure (r+^N - r-^N)/N, which
// keeps the operator exact on radial quadratics for p = 2 up to the center
// node, where symmetry forces a zero flux. Boundary rows are identity
// placeholders.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "plbranch/field.hpp"
#include "plbranch/problem.hpp"

namespace plbranch {

inline double flux_power(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::pow(std::abs(s), p - 2.0) * s;
}

// d(phi)/ds with a Jacobian-only duct; the residual never sees it.
inline double flux_power_slope(double s, double p) {
  const double eps = 1e-10 * (1.0 + std::abs(s));
  return (p - 1.0) * std::pow(s * s + eps * eps, 0.5 * (p - 2.0));
}

// Face factors A-(i), A+(i) for interior nodes.
struct FluxGeometry {
  std::vector<double> minus, plus;

  explicit FluxGeometry(const Mesh& m) {
    const int n = m.num_nodes();
    minus.assign(n, 0.0);
    plus.assign(n, 0.0);
    if (m.kind == MeshKind::Interval) {
      for (int i = 1; i < n - 1; ++i) minus[i] = plus[i] = 1.0 / m.h;
    } else {
      const int N = m.dimension;
      for (int i = 0; i < n - 1; ++i) {
        const double r = m.nodes[i];
        const double rp = r + 0.5 * m.h;
        const double rm = std::max(0.0, r - 0.5 * m.h);
        const double cell = (std::pow(rp, N) - std::pow(rm, N)) / N;
        plus[i] = std::pow(rp, N - 1) / cell;
        minus[i] = (i == 0) ? 0.0 : std::pow(rm, N - 1) / cell;
      }
    }
  }
};

namespace detail {

inline void minus_plap_into(const Mesh& mesh, const FluxGeometry& geo, double p,
                            const std::vector<double>& u, std::vector<double>& out) {
  const int n = mesh.num_nodes();
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    if (mesh.is_boundary(i)) {
      out[i] = u[i];
      continue;
    }
    const double dup = (u[i + 1] - u[i]) / mesh.h;
    const double fp = geo.plus[i] * flux_power(dup, p);
    double fm = 0.0;
    if (geo.minus[i] != 0.0) {
      const double dum = (u[i] - u[i - 1]) / mesh.h;
      fm = geo.minus[i] * flux_power(dum, p);
    }
    out[i] = -(fp - fm);
  }
}

}  // namespace detail

// Discrete -Lap_p u; boundary rows return u itself.
inline Field plap_apply(const Field& u, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("plap_apply: requires p > 1");
  const Mesh& mesh = *u.mesh;
  FluxGeometry geo(mesh);
  Field out = make_field(u.mesh);
  detail::minus_plap_into(mesh, geo, p, u.values, out.values);
  return out;
}

struct SolverOptions {
  double tol = 1e-10;  // sup-norm residual
  int max_iters = 200;
  int max_backtracks = 30;
  // The residual of a field with values of size S cannot be evaluated more
  // accurately than roundoff times the flux/rhs magnitudes; convergence is
  // declared at max(tol, noise_factor * estimated evaluation noise).
  double noise_factor = 16.0;
  std::vector<double>* residual_history = nullptr;  // optional trace for tests
};

// Right-hand side f(i, u_i) with derivative; the solver enforces zero
// Dirichlet data and either projects trial iterates to u >= 0 or insists on
// strictly positive interior values (singular limit problem).
struct NonlinearRhs {
  std::function<double(int, double)> value;
  std::function<double(int, double)> slope;
  bool project_nonnegative = true;
  bool require_positive_interior = false;
};

namespace detail {

// Tridiagonal solve (Thomas). Pivots are bumped away from zero; rows are
// diagonally dominated by the flux part in all intended uses.
inline void solve_tridiag(std::vector<double>& lo, std::vector<double>& di,
                          std::vector<double>& up, std::vector<double>& rhs) {
  const int n = static_cast<int>(di.size());
  for (int i = 1; i < n; ++i) {
    double piv = di[i - 1];
    if (std::abs(piv) < 1e-300) piv = piv < 0 ? -1e-300 : 1e-300;
    const double w = lo[i] / piv;
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  double piv = di[n - 1];
  if (std::abs(piv) < 1e-300) piv = piv < 0 ? -1e-300 : 1e-300;
  rhs[n - 1] /= piv;
  for (int i = n - 2; i >= 0; --i) {
    double d = di[i];
    if (std::abs(d) < 1e-300) d = d < 0 ? -1e-300 : 1e-300;
    rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / d;
  }
}

// Evaluates the residual; optionally estimates its roundoff floor. The
// dominant error is cancellation in the difference quotients, amplified by
// the flux slope: per face roughly phi'(Du) * eps * |u| / h.
inline double residual_into(const Mesh& mesh, const FluxGeometry& geo, double p,
                            const NonlinearRhs& rhs, const std::vector<double>& u,
                            std::vector<double>& res, double* noise = nullptr) {
  const int n = mesh.num_nodes();
  const double eps = std::numeric_limits<double>::epsilon();
  res.resize(n);
  double sup = 0.0, mag = 0.0;
  for (int i = 0; i < n; ++i) {
    if (mesh.is_boundary(i)) {
      res[i] = u[i];
    } else {
      const double dup = (u[i + 1] - u[i]) / mesh.h;
      const double fp = geo.plus[i] * flux_power(dup, p);
      double fm = 0.0, dum = 0.0;
      if (geo.minus[i] != 0.0) {
        dum = (u[i] - u[i - 1]) / mesh.h;
        fm = geo.minus[i] * flux_power(dum, p);
      }
      const double f = rhs.value(i, u[i]);
      res[i] = -(fp - fm) - f;
      if (noise) {
        double cancel =
            geo.plus[i] * flux_power_slope(dup, p) * (std::abs(u[i]) + std::abs(u[i + 1]));
        if (geo.minus[i] != 0.0)
          cancel +=
              geo.minus[i] * flux_power_slope(dum, p) * (std::abs(u[i]) + std::abs(u[i - 1]));
        mag = std::max(mag, cancel / mesh.h + std::abs(fp) + std::abs(fm) + std::abs(f));
      }
    }
    sup = std::max(sup, std::abs(res[i]));
  }
  if (noise) *noise = eps * mag;
  return sup;
}

}  // namespace detail

// Damped Newton on the flux-form residual. Backtracking halves the step until
// the residual sup-norm decreases; a step is never accepted otherwise. If the
// full Jacobian yields no acceptable step (the sublinear term can make it
// indefinite far from the solution) the iteration retries with the
// destabilizing part of the rhs derivative dropped.
inline std::pair<Field, SolveReport> newton_flux_solve(std::shared_ptr<const Mesh> mesh_ptr,
                                                       double p, const NonlinearRhs& rhs,
                                                       const Field& init,
                                                       const SolverOptions& opts = {}) {
  const Mesh& mesh = *mesh_ptr;
  FluxGeometry geo(mesh);
  const int n = mesh.num_nodes();

  std::vector<double> u = init.values;
  for (int i = 0; i < n; ++i)
    if (mesh.is_boundary(i)) u[i] = 0.0;

  std::vector<double> res(n), lo(n), di(n), up(n), step(n), trial(n), tres(n);
  SolveReport rep;

  double noise = 0.0;
  double sup = detail::residual_into(mesh, geo, p, rhs, u, res, &noise);
  double tol_eff = std::max(opts.tol, opts.noise_factor * noise);
  if (opts.residual_history) opts.residual_history->push_back(sup);

  for (rep.iterations = 0; rep.iterations < opts.max_iters && sup > tol_eff;
       ++rep.iterations) {
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      // Assemble the tridiagonal Jacobian. attempt 1 keeps only the
      // stabilizing (nonpositive) part of d(rhs)/du.
      for (int i = 0; i < n; ++i) {
        if (mesh.is_boundary(i)) {
          lo[i] = up[i] = 0.0;
          di[i] = 1.0;
          step[i] = -res[i];
          continue;
        }
        const double cp = geo.plus[i] * flux_power_slope((u[i + 1] - u[i]) / mesh.h, p) / mesh.h;
        const double cm = geo.minus[i] == 0.0
                              ? 0.0
                              : geo.minus[i] * flux_power_slope((u[i] - u[i - 1]) / mesh.h, p) / mesh.h;
        double ds = rhs.slope(i, u[i]);
        if (attempt == 1) ds = std::min(ds, 0.0);
        lo[i] = -cm;
        di[i] = cp + cm - ds;
        up[i] = -cp;
        step[i] = -res[i];
      }
      detail::solve_tridiag(lo, di, up, step);

      double t = 1.0;
      for (int back = 0; back <= opts.max_backtracks; ++back, t *= 0.5) {
        bool feasible = true;
        int clamped = 0;
        for (int i = 0; i < n; ++i) {
          double v = u[i] + t * step[i];
          if (mesh.is_boundary(i)) v = 0.0;
          if (rhs.project_nonnegative && v < 0.0) {
            v = 0.0;
            ++clamped;
          }
          if (rhs.require_positive_interior && !mesh.is_boundary(i) && !(v > 0.0)) {
            feasible = false;
            break;
          }
          trial[i] = v;
        }
        if (!feasible) continue;
        double tnoise = 0.0;
        const double tsup = detail::residual_into(mesh, geo, p, rhs, trial, tres, &tnoise);
        if (tsup < sup) {
          u.swap(trial);
          res.swap(tres);
          sup = tsup;
          noise = tnoise;
          tol_eff = std::max(opts.tol, opts.noise_factor * noise);
          if (back > 0) ++rep.damping_events;
          rep.floor_activations += clamped;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;  // stalled; report the residual we reached
    if (opts.residual_history) opts.residual_history->push_back(sup);
  }

  rep.final_residual = sup;
  rep.tol_effective = tol_eff;
  rep.converged = sup <= tol_eff;
  Field out;
  out.mesh = std::move(mesh_ptr);
  out.values = std::move(u);
  return {std::move(out), rep};
}

// Solve -Lap_p u = f with zero boundary data (f fixed per node).
inline std::pair<Field, SolveReport> solve_fixed_rhs(std::shared_ptr<const Mesh> mesh,
                                                     double p, const std::vector<double>& f,
                                                     const Field& init,
                                                     const SolverOptions& opts = {}) {
  NonlinearRhs rhs;
  rhs.value = [&f](int i, double) { return f[i]; };
  rhs.slope = [](int, double) { return 0.0; };
  return newton_flux_solve(std::move(mesh), p, rhs, init, opts);
}

// One rung of the regularization ladder:
//   -Lap_p u = alpha * ( min(a,n)/(u + 1/n)^delta + min(b,n) * u^beta ).
// The shift keeps the singular term finite at u = 0, so trial iterates are
// projected to u >= 0.
inline std::pair<Field, SolveReport> solve_regularized(const ProblemSpec& spec,
                                                       std::shared_ptr<const Mesh> mesh,
                                                       double alpha, double n,
                                                       const Field& init,
                                                       const SolverOptions& opts = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_regularized: requires alpha > 0");
  if (!(n >= 1.0)) throw std::invalid_argument("solve_regularized: requires n >= 1");
  for (double v : init.values)
    if (v < 0.0) throw std::invalid_argument("solve_regularized: init must be nonnegative");

  auto a = sample_potential(spec.a_fn, *mesh);
  auto b = sample_potential(spec.b_fn, *mesh);
  for (auto& v : a) v = std::min(v, n);
  for (auto& v : b) v = std::min(v, n);
  const double shift = 1.0 / n;
  const double delta = spec.delta, beta = spec.beta;

  NonlinearRhs rhs;
  rhs.value = [&a, &b, alpha, shift, delta, beta](int i, double u) {
    const double w = std::max(u, 0.0);
    return alpha * (a[i] * std::pow(w + shift, -delta) + b[i] * std::pow(w, beta));
  };
  // The beta-1 power is floored in the slope only; at u = 0 the exact
  // derivative is unbounded for beta < 1.
  rhs.slope = [&a, &b, alpha, shift, delta, beta](int i, double u) {
    const double w = std::max(u, 0.0);
    return alpha * (-delta * a[i] * std::pow(w + shift, -delta - 1.0) +
                    beta * b[i] * std::pow(std::max(w, 1e-12), beta - 1.0));
  };
  return newton_flux_solve(mesh, spec.p, rhs, init, opts);
}

// Singular limit problem (no truncation, no shift); requires a strictly
// positive starting iterate, normally the converged ladder field.
inline std::pair<Field, SolveReport> solve_singular_limit(const ProblemSpec& spec,
                                                          std::shared_ptr<const Mesh> mesh,
                                                          double alpha, const Field& init,
                                                          const SolverOptions& opts = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_singular_limit: requires alpha > 0");
  const auto a = sample_potential(spec.a_fn, *mesh);
  const auto b = sample_potential(spec.b_fn, *mesh);
  const double delta = spec.delta, beta = spec.beta;

  NonlinearRhs rhs;
  rhs.project_nonnegative = false;
  rhs.require_positive_interior = true;
  rhs.value = [=, &a, &b](int i, double u) {
    return alpha * (a[i] * std::pow(u, -delta) + b[i] * std::pow(u, beta));
  };
  rhs.slope = [=, &a, &b](int i, double u) {
    return alpha * (-delta * a[i] * std::pow(u, -delta - 1.0) +
                    beta * b[i] * std::pow(u, beta - 1.0));
  };
  return newton_flux_solve(std::move(mesh), spec.p, rhs, init, opts);
}

}  // namespace plbranch
