#include "pfem/assembly.hpp"
#include "pfem/projections.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace pfem;

namespace {

const Polygon kSquare = Polygon::unit_square();
constexpr double kPi = std::numbers::pi;

double sine(const Vec2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); }
Vec2 sine_grad(const Vec2& x) {
  return Vec2(kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()), kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()));
}

Vector random_dofs(const FESpace& space, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(space.num_dofs()));
  for (auto& c : v) c = u(gen);
  return v;
}

// FE field as a plain function together with its (elementwise) gradient.
struct FieldFunction {
  const FESpace& space;
  Vector full;
  double operator()(const Vec2& x) const {
    const std::vector<Vec2> p{x};
    return evaluate_field(space, full, p)[0];
  }
  Vec2 grad(const Vec2& x) const {
    const std::vector<Vec2> p{x};
    const PointSampler s = point_sampler(space, p);
    return Vec2((s.dx * full)[0], (s.dy * full)[0]);
  }
};

double l2_error(const FESpace& space, const Vector& coeffs, const ScalarFunction& f) {
  const PointSampler q = quadrature_sampler(space, 2 * space.degree() + 6);
  const Vector v = q.value * space.to_full(coeffs);
  double s = 0.0;
  for (std::size_t k = 0; k < q.weights.size(); ++k) s += q.weights[k] * std::pow(v[static_cast<Eigen::Index>(k)] - f(q.points[k]), 2);
  return std::sqrt(s);
}

double h1_error(const FESpace& space, const Vector& coeffs, const ScalarFunction& f, const GradientFunction& g) {
  const PointSampler q = quadrature_sampler(space, 2 * space.degree() + 6);
  const Vector full = space.to_full(coeffs);
  const Vector v = q.value * full, vx = q.dx * full, vy = q.dy * full;
  double s = 0.0;
  for (std::size_t k = 0; k < q.weights.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const Vec2 gr = g(q.points[k]);
    s += q.weights[k] * (std::pow(v[i] - f(q.points[k]), 2) + std::pow(vx[i] - gr.x(), 2) + std::pow(vy[i] - gr.y(), 2));
  }
  return std::sqrt(s);
}

double slope(const std::vector<double>& h, const std::vector<double>& e) {
  return std::log(e.front() / e.back()) / std::log(h.front() / h.back());
}

}  // namespace

TEST_CASE("L2 and Ritz projections are idempotent on S_h") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = build_space(build_polygon_mesh(kSquare, 0.25), r);
    const auto pair = assemble(space, make_sample("rough_isotropic", {{"beta", 0.6}, {"zx", 0.5}, {"zy", 0.5}}, kSquare));
    const Vector chi = random_dofs(*space, 5 + static_cast<std::uint64_t>(r));
    const FieldFunction f{*space, space->to_full(chi)};
    CHECK((l2_project(*pair, f) - chi).cwiseAbs().maxCoeff() <= 1e-11);
    const Vector R = ritz_project(*pair, f, [&](const Vec2& x) { return f.grad(x); });
    CHECK((R - chi).cwiseAbs().maxCoeff() <= 1e-11);
    CHECK(l2_project(*pair, [](const Vec2&) { return 0.0; }).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Ritz projection is Galerkin orthogonal") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 2);
  const auto pair = assemble(space, make_sample("smooth_anisotropic", {}, kSquare));
  const Vector R = ritz_project(*pair, sine, sine_grad);
  const GradientFunction flux = [&](const Vec2& x) { return Vec2(pair->coefficient->eval(x) * sine_grad(x)); };
  const Vector rhs = pair->restrict(divergence_load(*space, flux, pair->quadrature_order));
  CHECK((pair->A * R - rhs).cwiseAbs().maxCoeff() <= 1e-10 * rhs.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(ritz_project(*pair, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return Vec2(0, 0); }),
                  InvalidInput);
}

TEST_CASE("Ritz projection does not depend on a scalar multiple of the coefficient") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 1);
  const Vector R1 = ritz_project(*assemble(space, make_sample("identity", {}, kSquare)), sine, sine_grad);
  const Vector R3 = ritz_project(*assemble(space, make_sample("constant", {{"c", 3.0}}, kSquare)), sine, sine_grad);
  CHECK((R1 - R3).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("projection convergence rates") {
  std::vector<double> hs, ep, er, ei;
  auto mesh = build_polygon_mesh(kSquare, 0.125);
  const auto a = make_sample("identity", {}, kSquare);
  for (int l = 0; l < 3; ++l) {
    const auto space = build_space(mesh, 1);
    const auto pair = assemble(space, a);
    hs.push_back(mesh->h());
    ep.push_back(l2_error(*space, l2_project(*pair, sine), sine));
    er.push_back(h1_error(*space, ritz_project(*pair, sine, sine_grad), sine, sine_grad));
    ei.push_back(l2_error(*space, lagrange_interpolate(*space, sine), sine));
    mesh = refine_uniform(mesh);
  }
  CHECK(ep[0] / ep[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(ep[1] / ep[2] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(slope(hs, er) >= 0.9);
  CHECK(slope(hs, ei) >= 1.9);

  std::vector<double> h2, e2;
  mesh = build_polygon_mesh(kSquare, 0.25);
  for (int l = 0; l < 3; ++l) {
    const auto space = build_space(mesh, 2);
    h2.push_back(mesh->h());
    e2.push_back(l2_error(*space, lagrange_interpolate(*space, sine), sine));
    mesh = refine_uniform(mesh);
  }
  CHECK(slope(h2, e2) >= 2.9);
}

TEST_CASE("Lagrange interpolation reproduces polynomials vanishing on the boundary") {
  const Polygon tri({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
  auto cubic = [](const Vec2& x) { return x.x() * x.y() * (1.0 - x.x() - x.y()); };
  const auto s3 = build_space(build_polygon_mesh(tri, 0.25), 3);
  CHECK(l2_error(*s3, lagrange_interpolate(*s3, cubic), cubic) <= 1e-13);
  auto quartic = [](const Vec2& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); };
  const auto s4 = build_space(build_polygon_mesh(kSquare, 0.25), 4);
  CHECK(l2_error(*s4, lagrange_interpolate(*s4, quartic), quartic) <= 1e-13);
}

TEST_CASE("Clement interpolation reproduces constants at interior nodes") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 2);
  const Vector c = clement_interpolate(*space, [](const Vec2&) { return 2.5; });
  CHECK((c.array() - 2.5).abs().maxCoeff() <= 1e-13);
  CHECK(patch_constant(*space) >= 1.0);
}

TEST_CASE("regularized delta reproduces point values") {
  for (int r = 1; r <= 2; ++r) {
    const auto space = build_space(build_polygon_mesh(kSquare, 0.125), r);
    const Vec2 x0(0.41, 0.57);
    const RegularizedDelta delta = regularized_delta(*space, x0);
    const Vector load = delta_load(*space, x0);
    // Integrate delta against every global basis function by quadrature on the element.
    const PointSampler q = quadrature_sampler(*space, 4 * r + 12);
    double max_err = 0.0;
    std::vector<double> dv(q.points.size());
    for (std::size_t k = 0; k < q.points.size(); ++k) dv[k] = q.elements[k] == delta.element ? delta(q.points[k]) : 0.0;
    for (std::size_t n = 0; n < space->num_nodes(); ++n) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(space->num_nodes()));
      e[static_cast<Eigen::Index>(n)] = 1.0;
      const Vector phi = q.value * e;
      double s = 0.0;
      for (std::size_t k = 0; k < q.points.size(); ++k) s += q.weights[k] * dv[k] * phi[static_cast<Eigen::Index>(k)];
      max_err = std::max(max_err, std::abs(s - load[static_cast<Eigen::Index>(n)]));
    }
    CHECK(max_err <= 1e-11);
  }
}

TEST_CASE("regularized delta L1 norm is mesh independent") {
  auto mesh = build_polygon_mesh(kSquare, 0.125);
  std::vector<double> l1;
  for (int l = 0; l < 3; ++l) {
    l1.push_back(regularized_delta(*build_space(mesh, 1), Vec2(0.5, 0.5)).lp_norm(1.0));
    mesh = refine_uniform(mesh);
  }
  const auto [mn, mx] = std::minmax_element(l1.begin(), l1.end());
  CHECK(*mx / *mn <= 1.5);
}

TEST_CASE("discrete delta pairs with S_h like a point evaluation") {
  const auto space = build_space(build_polygon_mesh(kSquare, 0.125), 2);
  const auto pair = assemble(space, make_sample("identity", {}, kSquare));
  const Vec2 x0(0.3, 0.6);
  const DiscreteDelta dd = discrete_delta(*pair, x0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector chi = random_dofs(*space, 100 + s);
    const std::vector<Vec2> p{x0};
    CHECK(dd.coeffs.dot(pair->M * chi) == doctest::Approx(evaluate_field(*space, chi, p)[0]).epsilon(1e-11));
  }
  CHECK(dd.fit.rate > 0.0);
}

TEST_CASE("smoothstep") {
  for (int n = 1; n <= 5; ++n) {
    const Smoothstep S(n);
    CHECK(S(0.0) == doctest::Approx(0.0));
    CHECK(S(1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(S.derivative(0.0) == doctest::Approx(0.0));
    CHECK(S.derivative(1.0) == doctest::Approx(0.0));
    CHECK(S(0.5) == doctest::Approx(0.5).epsilon(1e-13));
    double prev = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double v = S(k / 100.0);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(S.max_slope() >= 1.0);
  }
}

TEST_CASE("superapproximation check") {
  const auto space = build_space(build_polygon_mesh(kSquare, 1.0 / 32), 1);
  const auto pair = assemble(space, make_sample("identity", {}, kSquare));
  const Disk D{Vec2(0.5, 0.5), 0.5};
  const auto zero = superapprox_check(*pair, D, 0.45, Vector::Zero(static_cast<Eigen::Index>(space->num_dofs())));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.ratio == 0.0);
  CHECK_THROWS_AS(superapprox_check(*pair, D, 0.05, random_dofs(*space, 1)), InvalidInput);
  const auto rep = superapprox_check(*pair, D, 0.45, random_dofs(*space, 2));
  CHECK(rep.lhs > 0.0);
  CHECK(std::isfinite(rep.ratio));
  CHECK(rep.ratio < 1.0);
}
