#include "pfem/coefficient.hpp"

#include "pfem/fespace.hpp"

#include <cmath>

namespace pfem {

namespace {

std::pair<double, double> symmetric_eigenvalues(const Mat2& a) {
  const double m = 0.5 * (a(0, 0) + a(1, 1));
  const double d = 0.5 * (a(0, 0) - a(1, 1));
  const double off = 0.5 * (a(0, 1) + a(1, 0));
  const double rad = std::hypot(d, off);
  return {m - rad, m + rad};
}

}  // namespace

CoefficientReport validate_coefficient(const CoefficientField& a, const FESpace& space) {
  CoefficientReport rep{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                        a.lambda, true, Vec2::Zero(), 0};
  const double lo = 1.0 / a.lambda * (1.0 - 1e-12);
  const double hi = a.lambda * (1.0 + 1e-12);
  double worst = -std::numeric_limits<double>::infinity();
  const Mesh& m = space.mesh();
  const auto& quad = space.quadrature();
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const Vec2 x = space.map_to_physical(t, quad.points()[q]);
      const Mat2 ax = a.eval(x);
      const auto [emin, emax] = symmetric_eigenvalues(ax);
      ++rep.points_checked;
      const bool asym = ax(0, 1) != ax(1, 0);
      // Violation measure: how far outside [lo, hi] in relative terms.
      double violation = std::max(lo - emin, emax - hi) / std::max(lo, 1e-300);
      if (!std::isfinite(emin) || !std::isfinite(emax) || asym) violation = std::numeric_limits<double>::infinity();
      if (violation > worst) {
        worst = violation;
        rep.worst_point = x;
      }
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, emin);
      rep.max_eigenvalue = std::max(rep.max_eigenvalue, emax);
      if (violation > 0.0) rep.pass = false;
    }
  }
  return rep;
}

}  // namespace pfem
