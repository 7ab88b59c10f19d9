#pragma once

#include <array>
#include <vector>

namespace pfem {

/// Gauss–Legendre nodes and weights on [0, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(int npoints);

/// Quadrature on the reference triangle {(s,t): s,t >= 0, s+t <= 1}.
///
/// Collapsed (Duffy) tensor rule built from Gauss–Legendre factors; exact for
/// polynomials of total degree <= order(). Points are stored as barycentric
/// coordinates, weights sum to 1 (area-normalised), so a physical integral is
/// area * sum(w_q f(x_q)).
class TriangleQuadrature {
 public:
  explicit TriangleQuadrature(int order);

  int order() const { return order_; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<std::array<double, 3>>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  int order_;
  std::vector<std::array<double, 3>> points_;
  std::vector<double> weights_;
};

}  // namespace pfem
