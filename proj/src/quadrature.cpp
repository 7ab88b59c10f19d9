#include "pfem/quadrature.hpp"

#include "pfem/common.hpp"

#include <cmath>
#include <utility>
#include <numbers>

namespace pfem {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre: need at least one point");
  // Returns (P_n(x), P_n'(x)) by the three-term recurrence.
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    // Map [-1,1] -> [0,1]; roots come out descending.
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

TriangleQuadrature::TriangleQuadrature(int order) : order_(order) {
  if (order < 0) throw InvalidInput("quadrature order must be non-negative");
  // s = u, t = (1-u) v, Jacobian (1-u): degree order+1 in u, order in v.
  const GaussLegendre gu = gauss_legendre((order + 3) / 2);
  const GaussLegendre gv = gauss_legendre((order + 2) / 2);
  for (std::size_t i = 0; i < gu.nodes.size(); ++i) {
    for (std::size_t j = 0; j < gv.nodes.size(); ++j) {
      const double u = gu.nodes[i];
      const double v = gv.nodes[j];
      const double s = u;
      const double t = (1.0 - u) * v;
      points_.push_back({1.0 - s - t, s, t});
      weights_.push_back(2.0 * gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
}

}  // namespace pfem
