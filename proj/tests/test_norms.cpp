#include "pfem/norms.hpp"
#include "pfem/projections.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace pfem;

namespace {

const Polygon kSquare = Polygon::unit_square();

// Hat function of an interior vertex and the area of its patch.
std::pair<Vector, double> hat(const FESpace& space, std::size_t vertex) {
  Vector full = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
  full[static_cast<Eigen::Index>(vertex)] = 1.0;
  double patch = 0.0;
  const Mesh& m = space.mesh();
  for (const auto& t : m.triangles()) {
    if (t[0] != int(vertex) && t[1] != int(vertex) && t[2] != int(vertex)) continue;
    const Vec2 a = m.vertices()[t[1]] - m.vertices()[t[0]], b = m.vertices()[t[2]] - m.vertices()[t[0]];
    patch += 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
  }
  return {full, patch};
}

}  // namespace

TEST_CASE("norms of a hat function") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 1);
  const NormEvaluator norms(*space);
  std::size_t v = 0;
  while (space->is_boundary_node(v)) ++v;
  const auto [phi, patch] = hat(*space, v);
  // int phi^2 = |patch| / 6, int phi^4 = |patch| / 15, |grad phi|^2 from the stiffness matrix.
  CHECK(norms(phi, 2.0) == doctest::Approx(std::sqrt(patch / 6.0)).epsilon(1e-12));
  CHECK(norms(phi, 4.0) == doctest::Approx(std::pow(patch / 15.0, 0.25)).epsilon(1e-12));
  CHECK(norms(phi, kInf) == 1.0);
  const auto pair = assemble(space, make_sample("identity", {}, kSquare));
  const Vector c = space->to_dofs(phi);
  CHECK(norms(phi, 2.0, Derivative::gradient) == doctest::Approx(std::sqrt(c.dot(pair->A * c))).epsilon(1e-12));
  CHECK(space_norm(*space, c, 2.0) == doctest::Approx(norms(phi, 2.0)));
}

TEST_CASE("constant field has norm |Omega|^(1/q)") {
  const Polygon hex = Polygon::regular(6, 1.0);
  const double area = 1.5 * std::sqrt(3.0);
  const auto space = build_space(build_polygon_mesh(hex, 0.25), 2);
  const NormEvaluator norms(*space);
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(space->num_nodes()));
  for (double q : {1.5, 2.0, 3.0, 7.0}) CHECK(norms(ones, q) == doctest::Approx(std::pow(area, 1.0 / q)).epsilon(1e-12));
  CHECK(norms(ones, kInf) == doctest::Approx(1.0));
  CHECK(norms(ones, 2.0, Derivative::gradient) <= 1e-12);
}

TEST_CASE("q = inf on quadratic elements samples inside elements") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.25), 2);
  // x(1-x) has its maximum 1/4 at x = 1/2, which is a vertex line; y(1-y) x(1-x) peaks at the centre.
  const Vector u = lagrange_interpolate(*space, [](const Vec2& x) { return 16.0 * x.x() * (1 - x.x()) * x.y() * (1 - x.y()); });
  CHECK(space_norm(*space, u, kInf) == doctest::Approx(1.0).epsilon(1e-12));
  // x (1.4 - x) is reproduced exactly; its maximum 0.49 at x = 0.7 is off the Lagrange nodes.
  const Vector w = lagrange_interpolate_full(*space, [](const Vec2& x) { return x.x() * (1.4 - x.x()); });
  const double exact = 0.7 * 0.7;
  const double nodal = w.cwiseAbs().maxCoeff();
  CHECK(nodal < exact - 1e-4);
  CHECK(space_norm(*space, w, kInf) <= exact + 1e-12);
  CHECK(space_norm(*space, w, kInf) >= exact - 1e-5);
}

TEST_CASE("Bochner norms against closed forms") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 1);
  const Vector phi = lagrange_interpolate(*space, [](const Vec2& x) { return std::sin(3 * x.x()) * x.y() * (1 - x.y()) * (1 - x.x()); });
  const double q2 = space_norm(*space, phi, 2.0);
  const double T = 2.0;

  BochnerField constant;
  constant.times = graded_grid(T, 5, 1.0);
  constant.snapshots.assign(constant.times.size(), phi);
  CHECK(bochner_norm(constant, *space, {2.0, 2.0}) == doctest::Approx(std::sqrt(T) * q2).epsilon(1e-13));
  CHECK(bochner_norm(constant, *space, {3.0, 2.0}) == doctest::Approx(std::cbrt(T) * q2).epsilon(1e-13));
  CHECK(bochner_norm(constant, *space, {kInf, 2.0}) == doctest::Approx(q2).epsilon(1e-13));

  BochnerField decay;
  decay.times = graded_grid(T, 4000, 2.0);
  decay.grading = 2.0;
  for (double t : decay.times) decay.snapshots.emplace_back(std::exp(-t) * phi);
  const double exact = std::sqrt((1.0 - std::exp(-2.0 * T)) / 2.0) * q2;
  CHECK(std::abs(bochner_norm(decay, *space, {2.0, 2.0, Derivative::none, 2.0}) - exact) <= 1e-4 * exact);

  CHECK_THROWS_AS(bochner_norm(constant, *space, {1.0, 2.0}), InvalidInput);
  CHECK_THROWS_AS(bochner_norm(constant, *space, {2.0, 0.5}), InvalidInput);
  CHECK_THROWS_AS((NormSpec{2.0, 2.0, Derivative::none, 0.5}.validate()), InvalidInput);
}

TEST_CASE("single-mode maximal regularity oracle") {
  // u' + lambda u = sin(w t), u(0) = 0 has the closed form
  // u = (lambda sin wt - w cos wt + w e^{-lambda t}) / (lambda^2 + w^2).
  const double w = std::numbers::pi;
  const Vector lam = (Vector(3) << 1.0, 50.0, 2000.0).finished();
  const auto grid = graded_grid(1.0, 2000, 1.0);
  Matrix load(3, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) load.col(static_cast<Eigen::Index>(i)).setConstant(std::sin(w * grid[i]));
  const Matrix u = duhamel_modal_from_coefficients(lam, load, grid);
  for (Eigen::Index k = 0; k < 3; ++k) {
    Vector au(static_cast<Eigen::Index>(grid.size())), s(au.size());
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i], l = lam[k];
      const double exact = (l * std::sin(w * t) - w * std::cos(w * t) + w * std::exp(-l * t)) / (l * l + w * w);
      err = std::max(err, std::abs(u(k, static_cast<Eigen::Index>(i)) - exact));
      au[static_cast<Eigen::Index>(i)] = l * std::abs(exact);
      s[static_cast<Eigen::Index>(i)] = std::abs(std::sin(w * t));
    }
    CHECK(err <= 1e-6 / lam[k]);
    // ||lambda u||_{L^2} <= ||s||_{L^2} for every lambda > 0.
    CHECK(bochner_from_values(grid, au, 2.0) <= bochner_from_values(grid, s, 2.0) * (1.0 + 1e-9));
  }
}

TEST_CASE("L-infinity stability of a single eigenmode is exactly one") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 1);
  const auto pair = assemble(space, make_sample("identity", {}, kSquare));
  const auto spec = spectral_decompose(*pair);
  const std::vector<Vector> samples{spec.eigenvectors.col(0), spec.eigenvectors.col(5)};
  CHECK(linf_stability_constant(spec, *space, samples, graded_grid(1.0, 200, 2.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(linf_stability_constant(spec, *space, {}, {0.0, 1.0}), InvalidInput);
}
