#include "pfem/evolution.hpp"
#include "pfem/projections.hpp"

#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace pfem;

namespace {

const Polygon kSquare = Polygon::unit_square();
constexpr double kPi = std::numbers::pi;

OperatorPairPtr square_pair(double h, int r, const std::string& coef = "identity",
                            const std::map<std::string, double>& params = {}) {
  return assemble(build_space(build_polygon_mesh(kSquare, h), r), make_sample(coef, params, kSquare));
}

double m_norm(const OperatorPair& pair, const Vector& v) { return std::sqrt(v.dot(pair.M * v)); }

}  // namespace

TEST_CASE("first eigenvalue approaches 2 pi^2 from above") {
  const double exact = 2.0 * kPi * kPi;
  std::vector<double> err, hs;
  for (double h : {0.25, 0.125, 0.0625}) {
    const auto pair = square_pair(h, 1);
    const auto spec = spectral_decompose(*pair);
    const double l1 = spec.eigenvalues[0];
    CHECK(l1 > exact);
    err.push_back(l1 - exact);
    hs.push_back(h);
  }
  const double slope = std::log(err.front() / err.back()) / std::log(hs.front() / hs.back());
  CHECK(slope >= 1.8);
}

TEST_CASE("first eigenvalue on the h = 1/4 square matches an independent P1 assembly") {
  // Element matrices in closed form (cotangent stiffness, area/12 mass), solved densely.
  const auto mesh = build_polygon_mesh(kSquare, 0.25);
  const auto n = static_cast<Eigen::Index>(mesh->num_vertices());
  Matrix K = Matrix::Zero(n, n), Mm = Matrix::Zero(n, n);
  for (const auto& t : mesh->triangles()) {
    Eigen::Matrix<double, 3, 2> x;
    for (int i = 0; i < 3; ++i) x.row(i) = mesh->vertices()[static_cast<std::size_t>(t[i])].transpose();
    const Vec2 e1 = x.row(1) - x.row(0), e2 = x.row(2) - x.row(0);
    const double area = 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    for (int i = 0; i < 3; ++i) {
      // grad lambda_i = rot90(x_{i+2} - x_{i+1}) / (2 area), up to orientation sign which cancels.
      const Vec2 gi = x.row((i + 2) % 3) - x.row((i + 1) % 3);
      for (int j = 0; j < 3; ++j) {
        const Vec2 gj = x.row((j + 2) % 3) - x.row((j + 1) % 3);
        K(t[i], t[j]) += gi.dot(gj) / (4.0 * area);
        Mm(t[i], t[j]) += area / 12.0 * (i == j ? 2.0 : 1.0);
      }
    }
  }
  std::vector<Eigen::Index> inner;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!mesh->boundary_flags()[static_cast<std::size_t>(i)]) inner.push_back(i);
  const Matrix Ki = K(inner, inner), Mi = Mm(inner, inner);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(Ki, Mi);
  const double oracle = ges.eigenvalues()[0];

  const auto spec = spectral_decompose(*square_pair(0.25, 1));
  CHECK(spec.eigenvalues[0] == doctest::Approx(oracle).epsilon(1e-10));
  const double exact = 2.0 * kPi * kPi;
  CHECK(spec.eigenvalues[0] > exact);
  // Overestimate of at most 5% at h = 1/4.
  CHECK(spec.eigenvalues[0] <= 1.05 * exact);
}

TEST_CASE("eigenvalues scale with a constant coefficient and vectors are M-orthonormal") {
  const auto p1 = square_pair(0.125, 2);
  const auto p3 = square_pair(0.125, 2, "constant", {{"c", 3.0}});
  const auto s1 = spectral_decompose(*p1);
  const auto s3 = spectral_decompose(*p3);
  CHECK(((s3.eigenvalues - 3.0 * s1.eigenvalues).cwiseAbs().array() / s1.eigenvalues.array()).maxCoeff() <= 1e-10);
  const Matrix G = s1.eigenvectors.transpose() * s1.mass_times_vectors;
  CHECK((G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index k = 1; k < s1.eigenvalues.size(); ++k) CHECK(s1.eigenvalues[k] >= s1.eigenvalues[k - 1]);
  CHECK_THROWS_AS(spectral_decompose(*p1, 10), CapExceeded);
}

TEST_CASE("semigroup identity at t = 0 and time derivatives") {
  const auto pair = square_pair(0.125, 1, "rough_isotropic", {{"beta", 0.6}, {"zx", 0.3}, {"zy", 0.7}});
  const auto spec = spectral_decompose(*pair);
  const Vector v = lagrange_interpolate(*pair->space, [](const Vec2& x) { return x.x() * (1 - x.x()) * x.y(); });
  CHECK((semigroup_apply(spec, 0.0, v) - v).cwiseAbs().maxCoeff() == 0.0);
  // At t = 0 the derivative is -A_h v = -M^{-1} A v.
  const Vector d0 = semigroup_apply(spec, 0.0, v, 1);
  CHECK((d0 + pair->solve_mass(pair->A * v)).cwiseAbs().maxCoeff() <= 1e-9 * d0.cwiseAbs().maxCoeff());

  const double t = 0.01, dt = 1e-5;
  const Vector fd1 = (semigroup_apply(spec, t + dt, v) - semigroup_apply(spec, t - dt, v)) / (2 * dt);
  const Vector d1 = semigroup_apply(spec, t, v, 1);
  CHECK((fd1 - d1).cwiseAbs().maxCoeff() <= 1e-5 * d1.cwiseAbs().maxCoeff());
  const Vector fd2 = (semigroup_apply(spec, t + dt, v, 1) - semigroup_apply(spec, t - dt, v, 1)) / (2 * dt);
  const Vector d2 = semigroup_apply(spec, t, v, 2);
  CHECK((fd2 - d2).cwiseAbs().maxCoeff() <= 1e-5 * d2.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(semigroup_apply(spec, -1.0, v), InvalidInput);
  CHECK_THROWS_AS(semigroup_apply(spec, 1.0, v, 3), InvalidInput);
}

TEST_CASE("Duhamel propagation matches the single-mode closed form") {
  const auto pair = square_pair(0.125, 1);
  const auto spec = spectral_decompose(*pair);
  const Vector v1 = spec.eigenvectors.col(0);
  const double lam = spec.eigenvalues[0];
  const Vector load = pair->M * v1;
  const auto grid = graded_grid(0.5, 37, 2.0);
  const BochnerField u = duhamel_solve(spec, [&](double) { return load; }, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector expected = (1.0 - std::exp(-lam * grid[i])) / lam * v1;
    CHECK((u.snapshots[i] - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }

  // Load linear in time is integrated exactly as well: f = t M v1.
  const BochnerField w = duhamel_solve(spec, [&](double t) { return Vector(t * load); }, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double c = t / lam - (1.0 - std::exp(-lam * t)) / (lam * lam);
    CHECK((w.snapshots[i] - c * v1).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Duhamel solution reaches the elliptic steady state") {
  const auto pair = square_pair(0.125, 2);
  const auto spec = spectral_decompose(*pair);
  const Vector f = pair->restrict(load_vector(*pair->space, [](const Vec2&) { return 1.0; }));
  const double T = 40.0 / spec.eigenvalues[0];
  const BochnerField u = duhamel_solve(spec, [&](double) { return f; }, graded_grid(T, 20, 1.0));
  const Vector steady = pair->solve_stiffness(f);
  CHECK((u.snapshots.back() - steady).cwiseAbs().maxCoeff() <= 1e-12 * steady.cwiseAbs().maxCoeff() + 1e-15);
}

TEST_CASE("theta scheme rates against the exact semigroup") {
  const auto pair = square_pair(0.125, 1);
  const auto spec = spectral_decompose(*pair);
  const Vector u0 = lagrange_interpolate(*pair->space, [](const Vec2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); });
  const double T = 0.1;
  const Vector exact = semigroup_apply(spec, T, u0);
  const TimeLoad zero = [&](double) { return Vector(Vector::Zero(u0.size())); };
  auto err = [&](double theta, double dt) {
    return m_norm(*pair, theta_step_solve(*pair, zero, T, dt, theta, u0).field.snapshots.back() - exact);
  };
  const double cn = err(0.5, T / 10) / err(0.5, T / 20);
  CHECK(cn == doctest::Approx(4.0).epsilon(0.2));
  const double be = err(1.0, T / 10) / err(1.0, T / 20);
  CHECK(be == doctest::Approx(2.0).epsilon(0.2));

  // One backward Euler step is the linear solve (M + dt A) u1 = M u0 + dt f(dt).
  const Vector f = pair->M * u0;
  const auto res = theta_step_solve(*pair, [&](double t) { return Vector(t * f); }, 0.01, 0.01, 1.0, u0);
  Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(pair->M + 0.01 * pair->A));
  const Vector u1 = solver.solve(pair->M * u0 + 0.01 * 0.01 * f);
  CHECK((res.field.snapshots[1] - u1).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(res.richardson_indicator > 0.0);

  CHECK_THROWS_AS(theta_step_solve(*pair, zero, T, 0.03, 0.5, u0), InvalidInput);
  CHECK_THROWS_AS(theta_step_solve(*pair, zero, T, 0.01, 0.3, u0), InvalidInput);
}

TEST_CASE("phi functions") {
  CHECK(phi1(0.0) == doctest::Approx(1.0));
  CHECK(phi2(0.0) == doctest::Approx(0.5));
  CHECK(phi1(1e-12) == doctest::Approx(1.0));
  CHECK(phi2(1e-9) == doctest::Approx(0.5));
  CHECK(phi1(1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(phi2(2.0) == doctest::Approx((2.0 - 1.0 + std::exp(-2.0)) / 4.0).epsilon(1e-14));
  // Near the switch point the series and closed forms agree.
  for (double z : {1e-4, 1e-3, 1e-2, 0.1}) {
    CHECK(phi1(z) == doctest::Approx(-std::expm1(-z) / z).epsilon(1e-13));
    CHECK(phi2(z) == doctest::Approx((z - 1.0 + std::exp(-z)) / (z * z)).epsilon(1e-6));
  }
}

TEST_CASE("graded grid and Bochner output") {
  const auto g = graded_grid(2.0, 4, 2.0);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(0.125));
  CHECK(g[4] == 2.0);
  CHECK_THROWS_AS(graded_grid(1.0, 4, 0.5), InvalidInput);

  BochnerField f;
  f.times = {0.0, 0.5};
  f.snapshots = {Vector::Constant(2, 1.0), Vector::Constant(2, 0.25)};
  std::ostringstream os;
  write_bochner(os, f);
  CHECK(os.str() == "t= 0\n0 1\n1 1\nt= 0.5\n0 0.25\n1 0.25\n");
  std::ostringstream idx;
  write_bochner_index(idx, f);
  CHECK(idx.str().find("\"count\": 2") != std::string::npos);
  f.times = {0.5, 0.5};
  CHECK_THROWS_AS(f.validate(), InvalidInput);
}
