#pragma once

// The nonlocal layer: G(u) = (integral of g(x,u))^r, the scalar map
// H(alpha) = alpha * G(T(alpha)), branch tracing over a log grid of alpha,
// classification of the four bifurcation shapes, extraction of the extremal
// level lambda*, and multiplicity counting by inverting H.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "plbranch/field.hpp"
#include "plbranch/localmap.hpp"
#include "plbranch/problem.hpp"
#include "plbranch/quadrature.hpp"

namespace plbranch {

namespace detail {

inline bool kernel_singular_at_zero(const ProblemSpec& spec, const Mesh& mesh) {
  if (spec.theta2 && *spec.theta2 > 0.0) return true;
  // Undeclared kernels: probe at a boundary position.
  const double xb = mesh.nodes[mesh.last()];
  const double g0 = spec.g_fn(xb, 0.0);
  return !std::isfinite(g0);
}

inline double cell_weight(const Mesh& mesh, double x) {
  if (mesh.kind == MeshKind::Interval) return 1.0;
  return unit_sphere_area(mesh.dimension) * std::pow(x, mesh.dimension - 1);
}

}  // namespace detail

// Quadrature of g(x, u(x)) over the mesh with u taken piecewise linear
// between nodes, raised to the power r. Cells whose boundary endpoint has
// u = 0 under a kernel singular at t -> 0+ are integrated one-sidedly with a
// graded substitution (exponent 2/(1-theta2)), so only the interior neighbor
// value enters there.
inline double integrate_kernel(const ProblemSpec& spec, const Mesh& mesh, const Field& u) {
  const bool singular = detail::kernel_singular_at_zero(spec, mesh);
  if (singular) {
    if (!spec.theta2)
      throw numerical_error("eval_G: kernel is singular at t=0 but theta2 is undeclared");
    if (!(*spec.theta2 < 1.0))
      throw numerical_error("eval_G: singular kernel requires theta2 < 1");
  }
  for (int i = mesh.first_interior(); i <= mesh.last_interior(); ++i) {
    if (!(u.values[i] > 0.0))
      throw numerical_error("eval_G: field must be positive at interior nodes");
    if (!std::isfinite(spec.g_fn(mesh.nodes[i], u.values[i])))
      throw numerical_error("eval_G: non-finite integrand at an interior node");
  }

  const GaussRule& plain = gauss16();
  const GaussRule& graded = gauss32();
  double total = 0.0;
  for (int i = 0; i + 1 < mesh.num_nodes(); ++i) {
    const double x0 = mesh.nodes[i], x1 = mesh.nodes[i + 1];
    const double u0 = u.values[i], u1 = u.values[i + 1];
    const double len = x1 - x0;
    const bool sing_left = singular && mesh.is_boundary(i) && u0 <= 0.0;
    const bool sing_right = singular && mesh.is_boundary(i + 1) && u1 <= 0.0;
    double cell = 0.0;
    if (sing_left || sing_right) {
      // Measure from the singular endpoint so tiny fractions do not cancel.
      const double xs = sing_left ? x0 : x1;
      const double xo = sing_left ? x1 : x0;
      const double uo = sing_left ? u1 : u0;
      const double m = 2.0 / (1.0 - *spec.theta2);
      for (int k = 0; k < static_cast<int>(graded.nodes.size()); ++k) {
        const double tau = graded.nodes[k];
        const double s = std::pow(tau, m);           // distance fraction from the singular end
        const double jac = m * std::pow(tau, m - 1.0) * len;
        const double x = xs + s * (xo - xs);
        const double uu = s * uo;
        cell += graded.weights[k] * jac * spec.g_fn(x, uu) * detail::cell_weight(mesh, x);
      }
    } else {
      for (int k = 0; k < static_cast<int>(plain.nodes.size()); ++k) {
        const double frac = plain.nodes[k];
        const double x = x0 + frac * len;
        const double uu = u0 + frac * (u1 - u0);
        cell += plain.weights[k] * len * spec.g_fn(x, uu) * detail::cell_weight(mesh, x);
      }
    }
    if (!std::isfinite(cell)) throw numerical_error("eval_G: non-finite cell integral");
    total += cell;
  }
  return total;
}

inline double eval_G(const ProblemSpec& spec, const Mesh& mesh, const Field& u) {
  const double integral = integrate_kernel(spec, mesh, u);
  if (spec.r == 0.0) return 1.0;
  const double G = std::pow(integral, spec.r);
  if (!std::isfinite(G)) throw numerical_error("eval_G: G(u) is not finite");
  return G;
}

struct BranchPoint {
  double alpha = 0.0;
  double H_value = 0.0;   // = lambda
  double sup_norm = 0.0;  // sup of T(alpha)
  double G_value = 0.0;
  double g_integral = 0.0;
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
};

enum class CaseLabel { Case1a, Case1b, Case2a, Case2b, Unclassified };

inline std::string to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::Case1a: return "Case1a";
    case CaseLabel::Case1b: return "Case1b";
    case CaseLabel::Case2a: return "Case2a";
    case CaseLabel::Case2b: return "Case2b";
    default: return "Unclassified";
  }
}

inline CaseLabel case_label_from_string(const std::string& s) {
  if (s == "Case1a") return CaseLabel::Case1a;
  if (s == "Case1b") return CaseLabel::Case1b;
  if (s == "Case2a") return CaseLabel::Case2a;
  if (s == "Case2b") return CaseLabel::Case2b;
  return CaseLabel::Unclassified;
}

struct Branch {
  std::vector<BranchPoint> points;  // sorted by alpha, strictly increasing
  std::optional<double> lambda_star;
  CaseLabel case_label = CaseLabel::Unclassified;
  std::vector<std::pair<double, int>> multiplicity_table;  // lambda -> #preimages
};

// End-limit and extremum classification on the converged points.
inline CaseLabel classify(const Branch& branch) {
  std::vector<const BranchPoint*> pts;
  for (const auto& p : branch.points)
    if (p.converged) pts.push_back(&p);
  if (pts.size() < 16)
    throw std::invalid_argument("classify: needs at least 16 converged points");
  if (std::log10(pts.back()->alpha / pts.front()->alpha) < 3.0)
    throw std::invalid_argument("classify: needs an alpha range spanning >= 3 decades");

  auto fit_slope = [&](int i0, int i1) {
    // Least-squares slope of log H against log alpha.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = i1 - i0 + 1;
    for (int i = i0; i <= i1; ++i) {
      const double x = std::log(pts[i]->alpha), y = std::log(pts[i]->H_value);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  const double slope_left = fit_slope(0, 2);
  const double slope_right = fit_slope(static_cast<int>(pts.size()) - 3,
                                       static_cast<int>(pts.size()) - 1);

  double hmax = 0.0;
  for (auto* p : pts) hmax = std::max(hmax, std::abs(p->H_value));
  int changes = 0, prev_sign = 0;
  int first_change_dir = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double d = pts[i + 1]->H_value - pts[i]->H_value;
    if (std::abs(d) <= 1e-11 * hmax) continue;
    const int s = d > 0 ? 1 : -1;
    if (prev_sign != 0 && s != prev_sign) {
      ++changes;
      if (changes == 1) first_change_dir = prev_sign;  // +1: was rising -> max
    }
    prev_sign = s;
  }

  const double eps = 0.05;
  if (slope_left > eps && slope_right > eps && changes == 0) return CaseLabel::Case1a;
  if (slope_left > eps && slope_right < -eps && changes == 1 && first_change_dir > 0)
    return CaseLabel::Case1b;
  if (slope_left < -eps && slope_right > eps && changes == 1 && first_change_dir < 0)
    return CaseLabel::Case2a;
  if (slope_left < -eps && slope_right < -eps && changes == 0) return CaseLabel::Case2b;
  return CaseLabel::Unclassified;
}

struct TraceOptions {
  int threads = 1;
  int refine_rounds = 2;  // extra points near slope sign changes
  int multiplicity_samples = 9;
  LadderOptions ladder;
};

class BranchTracer {
 public:
  BranchTracer(ProblemSpec spec, std::shared_ptr<const Mesh> mesh, TraceOptions opts = {})
      : map_(std::move(spec), std::move(mesh), opts.ladder), opts_(opts) {}

  const LocalSolutionMap& local_map() const { return map_; }
  const ProblemSpec& spec() const { return map_.spec(); }
  const Mesh& mesh() const { return *map_.mesh(); }

  // H(alpha) = alpha * G(T(alpha)); ladder failures propagate.
  BranchPoint eval_H(double alpha) const {
    if (!(alpha > 0.0)) throw std::invalid_argument("eval_H: requires alpha > 0");
    const LadderResult res = map_.solve(alpha);
    BranchPoint bp;
    bp.alpha = alpha;
    bp.g_integral = integrate_kernel(spec(), mesh(), res.u);
    bp.G_value = spec().r == 0.0 ? 1.0 : std::pow(bp.g_integral, spec().r);
    bp.H_value = alpha * bp.G_value;
    bp.sup_norm = sup_norm(res.u);
    bp.converged = res.report.converged;
    bp.iterations = res.report.iterations;
    bp.final_residual = res.report.final_residual;
    if (!std::isfinite(bp.H_value)) throw numerical_error("eval_H: H(alpha) is not finite");
    return bp;
  }

  Branch trace_branch(double alpha_min, double alpha_max, int K) const {
    if (!(alpha_min > 0.0 && alpha_min < alpha_max))
      throw std::invalid_argument("trace_branch: requires 0 < alpha_min < alpha_max");
    if (K < 16) throw std::invalid_argument("trace_branch: requires K >= 16");

    std::vector<double> alphas(K);
    const double la = std::log(alpha_min), lb = std::log(alpha_max);
    for (int i = 0; i < K; ++i) alphas[i] = std::exp(la + (lb - la) * i / (K - 1));
    alphas.front() = alpha_min;
    alphas.back() = alpha_max;

    Branch branch;
    branch.points = eval_many(alphas);

    // Adaptive refinement near discrete-slope sign changes (localizes the
    // interior extremum before lambda* extraction).
    for (int round = 0; round < opts_.refine_rounds; ++round) {
      std::vector<double> extra;
      const auto& pts = branch.points;
      for (size_t i = 1; i + 1 < pts.size(); ++i) {
        if (!pts[i - 1].converged || !pts[i].converged || !pts[i + 1].converged) continue;
        const double d0 = pts[i].H_value - pts[i - 1].H_value;
        const double d1 = pts[i + 1].H_value - pts[i].H_value;
        if (d0 * d1 < 0.0) {
          extra.push_back(std::sqrt(pts[i - 1].alpha * pts[i].alpha));
          extra.push_back(std::sqrt(pts[i].alpha * pts[i + 1].alpha));
        }
      }
      if (extra.empty()) break;
      auto fresh = eval_many(extra);
      branch.points.insert(branch.points.end(), fresh.begin(), fresh.end());
      sort_dedup(branch.points);
    }

    int ok = 0;
    for (const auto& p : branch.points) ok += p.converged ? 1 : 0;
    if (ok < static_cast<int>(0.8 * branch.points.size()))
      throw numerical_error("trace_branch: fewer than 80% of grid points converged");

    fill_multiplicity_table(branch);
    return branch;
  }

  // Extremal H for the non-monotone cases; golden-section refinement of the
  // grid bracket down to 1e-3 relative alpha width. The refined extremal
  // point is inserted into the branch.
  double find_lambda_star(Branch& branch) const {
    if (branch.case_label != CaseLabel::Case1b && branch.case_label != CaseLabel::Case2a)
      throw std::invalid_argument("find_lambda_star: branch is monotone (" +
                                  to_string(branch.case_label) + ")");
    const bool maximize = branch.case_label == CaseLabel::Case1b;

    const auto& pts = branch.points;
    int best = -1;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      if (!pts[i].converged) continue;
      if (best < 0 || (maximize ? pts[i].H_value > pts[best].H_value
                                : pts[i].H_value < pts[best].H_value))
        best = i;
    }
    if (best <= 0 || best + 1 >= static_cast<int>(pts.size()))
      throw numerical_error("find_lambda_star: extremum sits at the grid edge");

    double lo = std::log(pts[best - 1].alpha), hi = std::log(pts[best + 1].alpha);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    BranchPoint p1 = eval_H(std::exp(x1)), p2 = eval_H(std::exp(x2));
    BranchPoint best_pt = maximize == (p1.H_value > p2.H_value) ? p1 : p2;
    while (hi - lo > 1e-3) {
      const bool keep_left = maximize ? (p1.H_value > p2.H_value) : (p1.H_value < p2.H_value);
      if (keep_left) {
        hi = x2; x2 = x1; p2 = p1;
        x1 = hi - gr * (hi - lo);
        p1 = eval_H(std::exp(x1));
      } else {
        lo = x1; x1 = x2; p1 = p2;
        x2 = lo + gr * (hi - lo);
        p2 = eval_H(std::exp(x2));
      }
      const BranchPoint& cand = maximize == (p1.H_value > p2.H_value) ? p1 : p2;
      if (maximize ? cand.H_value > best_pt.H_value : cand.H_value < best_pt.H_value)
        best_pt = cand;
    }
    if (maximize ? pts[best].H_value > best_pt.H_value : pts[best].H_value < best_pt.H_value)
      best_pt = pts[best];
    branch.points.push_back(best_pt);
    sort_dedup(branch.points);
    branch.lambda_star = best_pt.H_value;
    return best_pt.H_value;
  }

  // All transversal solutions of H(alpha) = lambda along the traced grid,
  // bisected to 1e-6 relative alpha tolerance.
  std::vector<double> invert_H(const Branch& branch, double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("invert_H: requires lambda > 0");
    std::vector<const BranchPoint*> pts;
    for (const auto& p : branch.points)
      if (p.converged) pts.push_back(&p);

    std::vector<double> roots;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const double f0 = pts[i]->H_value - lambda;
      const double f1 = pts[i + 1]->H_value - lambda;
      if (f0 == 0.0) roots.push_back(pts[i]->alpha);
      if (f0 * f1 < 0.0) {
        double lo = pts[i]->alpha, hi = pts[i + 1]->alpha;
        double flo = f0;
        while ((hi - lo) / hi > 1e-6) {
          const double mid = std::sqrt(lo * hi);
          const double fm = eval_H(mid).H_value - lambda;
          if (fm == 0.0) { lo = hi = mid; break; }
          if (flo * fm < 0.0) hi = mid;
          else { lo = mid; flo = fm; }
        }
        roots.push_back(std::sqrt(lo * hi));
      }
    }
    if (!pts.empty() && pts.back()->H_value == lambda) roots.push_back(pts.back()->alpha);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-9 * b; }),
                roots.end());
    return roots;
  }

 private:
  std::vector<BranchPoint> eval_many(const std::vector<double>& alphas) const {
    std::vector<BranchPoint> out(alphas.size());
    auto work = [&](size_t begin, size_t end) {
      for (size_t i = begin; i < end; ++i) {
        try {
          out[i] = eval_H(alphas[i]);
        } catch (const numerical_error&) {
          out[i].alpha = alphas[i];
          out[i].converged = false;
          out[i].H_value = std::numeric_limits<double>::quiet_NaN();
        }
      }
    };
    const int nt = std::max(1, opts_.threads);
    if (nt == 1 || alphas.size() < 4) {
      work(0, alphas.size());
    } else {
      std::vector<std::thread> pool;
      const size_t chunk = (alphas.size() + nt - 1) / nt;
      for (int t = 0; t < nt; ++t) {
        const size_t b = t * chunk, e = std::min(alphas.size(), b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }
    std::vector<BranchPoint> sorted = out;
    sort_dedup(sorted);
    return sorted;
  }

  static void sort_dedup(std::vector<BranchPoint>& pts) {
    std::sort(pts.begin(), pts.end(),
              [](const BranchPoint& a, const BranchPoint& b) { return a.alpha < b.alpha; });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const BranchPoint& a, const BranchPoint& b) {
                            return a.alpha == b.alpha;
                          }),
              pts.end());
  }

  void fill_multiplicity_table(Branch& branch) const {
    std::vector<double> hs;
    for (const auto& p : branch.points)
      if (p.converged) hs.push_back(p.H_value);
    if (hs.size() < 2) return;
    const double lo = *std::min_element(hs.begin(), hs.end());
    const double hi = *std::max_element(hs.begin(), hs.end());
    if (!(lo > 0.0) || hi <= lo) return;
    const int n = opts_.multiplicity_samples;
    for (int k = 0; k < n; ++k) {
      // Geometric samples strictly inside (min H, max H).
      const double lambda = lo * std::pow(hi / lo, (k + 1.0) / (n + 1.0));
      int count = 0;
      const auto& pts = branch.points;
      for (size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!pts[i].converged || !pts[i + 1].converged) continue;
        const double f0 = pts[i].H_value - lambda, f1 = pts[i + 1].H_value - lambda;
        if (f0 == 0.0 || f0 * f1 < 0.0) ++count;
      }
      branch.multiplicity_table.emplace_back(lambda, count);
    }
  }

  LocalSolutionMap map_;
  TraceOptions opts_;
};

}  // namespace plbranch
