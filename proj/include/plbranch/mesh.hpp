#pragma once

// Uniform 1D meshes for the two supported domain types: an open interval
// (a,b) and a radial ball of radius R in dimension N (nodes are radii).
// Quadrature weights integrate the domain measure exactly: for the ball the
// per-node weight is sigma_N * integral of r^{N-1} over the node's cell, so
// the weight sum equals |Omega| independent of resolution.

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace plbranch {

enum class MeshKind { Interval, RadialBall };

struct Mesh {
  MeshKind kind = MeshKind::Interval;
  int dimension = 1;  // N; 1 for intervals
  double h = 0.0;     // uniform node spacing
  std::vector<double> nodes;             // coordinates (radii for balls)
  std::vector<double> quad_weights;      // sum_i w_i f(x_i) ~ integral over Omega
  std::vector<double> boundary_distance; // d(x) in the original domain
  double measure = 0.0;                  // |Omega|

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int last() const { return num_nodes() - 1; }

  bool is_boundary(int i) const {
    if (kind == MeshKind::Interval) return i == 0 || i == last();
    return i == last();  // the ball's center is an interior node
  }
  int first_interior() const { return kind == MeshKind::Interval ? 1 : 0; }
  int last_interior() const { return last() - 1; }
  int num_interior() const { return last_interior() - first_interior() + 1; }
};

// Surface area of the unit sphere S^{N-1}.
inline double unit_sphere_area(int N) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

inline std::shared_ptr<const Mesh> build_interval(double a, double b, int M) {
  if (!(a < b)) throw std::invalid_argument("build_interval: requires a < b");
  if (M < 8) throw std::invalid_argument("build_interval: requires M >= 8 subintervals");
  auto m = std::make_shared<Mesh>();
  m->kind = MeshKind::Interval;
  m->dimension = 1;
  m->h = (b - a) / M;
  m->nodes.resize(M + 1);
  m->quad_weights.resize(M + 1);
  m->boundary_distance.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = a + i * m->h;
    m->nodes[i] = (i == M) ? b : x;
    m->quad_weights[i] = (i == 0 || i == M) ? 0.5 * m->h : m->h;
    m->boundary_distance[i] = std::min(m->nodes[i] - a, b - m->nodes[i]);
  }
  m->measure = b - a;
  return m;
}

inline std::shared_ptr<const Mesh> build_radial(double R, int N, int M) {
  if (!(R > 0.0)) throw std::invalid_argument("build_radial: requires R > 0");
  if (N < 2) throw std::invalid_argument("build_radial: requires dimension N >= 2");
  if (M < 8) throw std::invalid_argument("build_radial: requires M >= 8 subintervals");
  auto m = std::make_shared<Mesh>();
  m->kind = MeshKind::RadialBall;
  m->dimension = N;
  m->h = R / M;
  m->nodes.resize(M + 1);
  m->quad_weights.resize(M + 1);
  m->boundary_distance.resize(M + 1);
  const double sigma = unit_sphere_area(N);
  for (int i = 0; i <= M; ++i) {
    const double r = (i == M) ? R : i * m->h;
    m->nodes[i] = r;
    const double lo = std::max(0.0, r - 0.5 * m->h);
    const double hi = std::min(R, r + 0.5 * m->h);
    m->quad_weights[i] = sigma * (std::pow(hi, N) - std::pow(lo, N)) / N;
    m->boundary_distance[i] = R - r;
  }
  m->measure = sigma * std::pow(R, N) / N;
  return m;
}

}  // namespace plbranch
