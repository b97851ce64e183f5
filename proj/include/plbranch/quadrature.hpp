#pragma once

// Gauss-Legendre rules computed by Newton iteration on the Legendre
// recurrence (no hardcoded tables).

#include <cmath>
#include <numbers>
#include <vector>

namespace plbranch {

struct GaussRule {
  std::vector<double> nodes, weights;  // on [0,1]
};

inline GaussRule gauss_legendre_01(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.nodes[i] = 0.5 * (1.0 - x);  // descending roots map to ascending nodes
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

inline const GaussRule& gauss16() {
  static const GaussRule r = gauss_legendre_01(16);
  return r;
}

inline const GaussRule& gauss32() {
  static const GaussRule r = gauss_legendre_01(32);
  return r;
}

}  // namespace plbranch
