#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "plbranch/plap.hpp"

using namespace plbranch;

namespace {

ProblemSpec basic_spec(double p, double delta, double beta,
                       double a_const, double b_const) {
  ProblemSpec s;
  s.p = p;
  s.delta = delta;
  s.beta = beta;
  s.a_fn = [a_const](double) { return a_const; };
  s.b_fn = [b_const](double) { return b_const; };
  s.g_fn = [](double, double) { return 1.0; };
  return s;
}

}  // namespace

TEST_CASE("plap of a constant vanishes at interior nodes") {
  for (double p : {1.5, 2.0, 3.0}) {
    auto m = build_interval(0.0, 1.0, 32);
    Field u = make_field(m, 3.7);
    Field out = plap_apply(u, p);
    for (int i = m->first_interior(); i <= m->last_interior(); ++i)
      CHECK(out.values[i] == 0.0);
    CHECK(out.values[0] == 3.7);  // identity placeholder rows
  }
}

TEST_CASE("plap rejects p <= 1") {
  auto m = build_interval(0.0, 1.0, 16);
  Field u = make_field(m, 1.0);
  CHECK_THROWS_AS(plap_apply(u, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(plap_apply(u, 0.5), std::invalid_argument);
}

TEST_CASE("p=2 recovers -u'' exactly on quadratics") {
  auto m = build_interval(0.0, 1.0, 64);
  Field u = make_field_from(m, [](double x) { return 0.5 * x * (1.0 - x); });
  Field out = plap_apply(u, 2.0);
  for (int i = m->first_interior(); i <= m->last_interior(); ++i)
    CHECK(out.values[i] == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("p=3 torsion closed form has unit p-Laplacian away from the kink") {
  auto err_at = [](int M) {
    auto m = build_interval(0.0, 1.0, M);
    Field u = make_field_from(m, [](double x) { return oracles::torsion_exact(3.0, x); });
    Field out = plap_apply(u, 3.0);
    double err = 0.0;
    for (int i = m->first_interior(); i <= m->last_interior(); ++i)
      if (std::abs(m->nodes[i] - 0.5) > 0.1) err = std::max(err, std::abs(out.values[i] - 1.0));
    return err;
  };
  const double e256 = err_at(256), e512 = err_at(512);
  CHECK(e512 < 1e-4);
  CHECK(e512 < 0.5 * e256);  // refinement shrinks the defect
}

TEST_CASE("plap is (p-1)-homogeneous") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  for (double p : {1.5, 2.0, 2.7}) {
    auto m = build_interval(0.0, 1.0, 24);
    Field u = make_field_from(m, [&](double x) { return std::sin(3.0 * x) + 1.2 + unif(rng) * 0.0; });
    for (int i = 0; i < u.size(); ++i) u.values[i] += 0.05 * unif(rng);
    const double c = unif(rng);
    Field a = plap_apply(scaled(u, c), p);
    Field b = plap_apply(u, p);
    const double scale = sup_norm(a) + 1.0;
    for (int i = m->first_interior(); i <= m->last_interior(); ++i)
      CHECK(std::abs(a.values[i] - std::pow(c, p - 1.0) * b.values[i]) <= 1e-10 * scale);
  }
}

TEST_CASE("radial p=2 Laplacian is exact on the quadratic torsion profile") {
  const int N = 3;
  auto m = build_radial(1.0, N, 32);
  Field u = make_field_from(m, [N](double r) { return (1.0 - r * r) / (2.0 * N); });
  Field out = plap_apply(u, 2.0);
  for (int i = m->first_interior(); i <= m->last_interior(); ++i)
    CHECK(out.values[i] == Catch::Approx(1.0).margin(1e-11));
}

TEST_CASE("fixed-rhs solve reproduces the p=2 torsion function") {
  auto m = build_interval(0.0, 1.0, 128);
  std::vector<double> f(m->num_nodes(), 1.0);
  f.front() = f.back() = 0.0;
  auto [u, rep] = solve_fixed_rhs(m, 2.0, f, make_field(m, 0.0));
  REQUIRE(rep.converged);
  for (int i = 0; i < u.size(); ++i)
    CHECK(u.values[i] == Catch::Approx(0.5 * m->nodes[i] * (1.0 - m->nodes[i])).margin(1e-11));
}

TEST_CASE("damped Newton never accepts a residual increase") {
  auto m = build_interval(0.0, 1.0, 64);
  auto spec = basic_spec(2.0, 1.0, 0.5, 1.0, 1.0);
  std::vector<double> history;
  SolverOptions opts;
  opts.residual_history = &history;
  auto [u, rep] = solve_regularized(spec, m, 2.0, 16.0, make_field(m, 0.01), opts);
  REQUIRE(rep.converged);
  REQUIRE(history.size() >= 2);
  for (size_t i = 1; i < history.size(); ++i) CHECK(history[i] < history[i - 1]);
}

TEST_CASE("regularized solve keeps symmetry of symmetric data") {
  auto m = build_interval(-1.0, 1.0, 64);
  auto spec = basic_spec(2.0, 1.0, 0.5, 1.0, 0.5);
  auto [u, rep] = solve_regularized(spec, m, 1.0, 1024.0, make_field(m, 0.1));
  REQUIRE(rep.converged);
  const int n = u.size();
  for (int i = 0; i < n; ++i)
    CHECK(u.values[i] == Catch::Approx(u.values[n - 1 - i]).margin(1e-12));
}

TEST_CASE("regularized solve matches a 16x finer reference") {
  auto spec = basic_spec(2.0, 1.0, 0.5, 1.0, 0.0);
  const double n = 1e6;
  auto coarse_mesh = build_interval(0.0, 1.0, 128);
  auto fine_mesh = build_interval(0.0, 1.0, 2048);
  auto [uc, rc] = solve_regularized(spec, coarse_mesh, 1.0, n, make_field(coarse_mesh, 0.05));
  auto [uf, rf] = solve_regularized(spec, fine_mesh, 1.0, n, make_field(fine_mesh, 0.05));
  REQUIRE(rc.converged);
  REQUIRE(rf.converged);
  double err = 0.0;
  for (int i = 0; i < uc.size(); ++i)
    err = std::max(err, std::abs(uc.values[i] - uf.values[16 * i]));
  CHECK(err <= 1e-3);
}

TEST_CASE("ladder solution agrees with an independent fixed-point iteration") {
  // Nonsingular sublinear problem: a = 0, b = 1, p = 2.
  auto m = build_interval(0.0, 1.0, 128);
  auto spec = basic_spec(2.0, 1.0, 0.5, 0.0, 1.0);
  auto [u, rep] = solve_regularized(spec, m, 1.0, 4.0, make_field(m, 0.05));
  REQUIRE(rep.converged);
  auto ref = oracles::fixed_point_sublinear(m->nodes, m->h, 1.0,
                                            [](double) { return 1.0; }, 0.5);
  double err = 0.0;
  for (int i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u.values[i] - ref[i]));
  CHECK(err <= 1e-8);
}

TEST_CASE("solver rejects invalid arguments") {
  auto m = build_interval(0.0, 1.0, 16);
  auto spec = basic_spec(2.0, 1.0, 0.5, 1.0, 1.0);
  CHECK_THROWS_AS(solve_regularized(spec, m, -1.0, 1.0, make_field(m, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_regularized(spec, m, 1.0, 0.5, make_field(m, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_regularized(spec, m, 1.0, 1.0, make_field(m, -0.5)),
                  std::invalid_argument);
}

TEST_CASE("maximum principle: converged solutions are strictly positive inside") {
  auto m = build_interval(0.0, 1.0, 48);
  for (auto [a, b] : {std::pair{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}) {
    auto spec = basic_spec(2.0, 1.0, 0.5, a, b);
    auto [u, rep] = solve_regularized(spec, m, 1.0, 4096.0, make_field(m, 0.05));
    REQUIRE(rep.converged);
    CHECK(interior_min(u) > 0.0);
  }
}
