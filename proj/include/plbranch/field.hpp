#pragma once

// Nodal function values on a Mesh.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "plbranch/mesh.hpp"

namespace plbranch {

struct Field {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> values;

  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }
};

inline Field make_field(std::shared_ptr<const Mesh> mesh, double c = 0.0) {
  Field f;
  f.values.assign(mesh->num_nodes(), c);
  f.mesh = std::move(mesh);
  return f;
}

template <class Fn>
inline Field make_field_from(std::shared_ptr<const Mesh> mesh, Fn&& fn) {
  Field f = make_field(mesh);
  for (int i = 0; i < f.size(); ++i) f.values[i] = fn(mesh->nodes[i]);
  return f;
}

inline void check_same_mesh(const Field& a, const Field& b) {
  if (a.mesh != b.mesh &&
      !(a.mesh && b.mesh && a.mesh->nodes == b.mesh->nodes &&
        a.mesh->kind == b.mesh->kind))
    throw std::invalid_argument("fields live on different meshes");
}

inline double sup_norm(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  check_same_mesh(a, b);
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline double interior_min(const Field& f) {
  const Mesh& m = *f.mesh;
  double v = std::numeric_limits<double>::infinity();
  for (int i = m.first_interior(); i <= m.last_interior(); ++i) v = std::min(v, f.values[i]);
  return v;
}

inline Field scaled(const Field& f, double c) {
  Field g = f;
  for (double& v : g.values) v *= c;
  return g;
}

}  // namespace plbranch
