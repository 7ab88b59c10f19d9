#include "pfem/fespace.hpp"
#include "pfem/projections.hpp"
#include "pfem/quadrature.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace pfem;

namespace {

MeshPtr square(double h) { return build_polygon_mesh(Polygon::unit_square(), h); }

}  // namespace

TEST_CASE("triangle quadrature exactness") {
  // int over the reference triangle of l0^a l1^b l2^c = a! b! c! 2 / (a+b+c+2)!, normalised by area 1/2.
  auto exact = [](int a, int b, int c) {
    return std::tgamma(a + 1) * std::tgamma(b + 1) * std::tgamma(c + 1) * 2.0 / std::tgamma(a + b + c + 3);
  };
  for (int order = 1; order <= 12; ++order) {
    const TriangleQuadrature q(order);
    double wsum = 0.0;
    for (double w : q.weights()) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        const int c = order - a - b;
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) {
          const auto& l = q.points()[k];
          s += q.weights()[k] * std::pow(l[0], a) * std::pow(l[1], b) * std::pow(l[2], c);
        }
        CHECK(s == doctest::Approx(exact(a, b, c)).epsilon(1e-12));
      }
  }
}

TEST_CASE("Lagrange basis partition of unity and nodal property") {
  for (int r = 1; r <= 4; ++r) {
    const LagrangeBasis basis(r);
    CHECK(basis.size() == (r + 1) * (r + 2) / 2);
    std::vector<double> v(static_cast<std::size_t>(basis.size()));
    for (int k = 0; k < basis.size(); ++k) {
      const auto& n = basis.node(k);
      basis.eval({double(n[0]) / r, double(n[1]) / r, double(n[2]) / r}, v);
      for (int m = 0; m < basis.size(); ++m) CHECK(v[static_cast<std::size_t>(m)] == doctest::Approx(m == k ? 1.0 : 0.0).epsilon(1e-13));
    }
    basis.eval({0.2, 0.3, 0.5}, v);
    double s = 0.0;
    for (double x : v) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("dof counts") {
  CHECK(build_space(square(0.5), 1)->num_nodes() == 9);
  CHECK(build_space(square(0.5), 1)->num_dofs() == 1);
  CHECK(build_space(square(0.5), 2)->num_nodes() == 25);
  CHECK(build_space(square(0.5), 2)->num_dofs() == 9);
  CHECK(build_space(refine_uniform(square(0.5)), 1)->num_dofs() == 9);
  CHECK_THROWS_AS(build_space(square(0.5), 0), InvalidInput);
  CHECK_THROWS_AS(build_space(square(0.5), 2, 3), InvalidInput);
}

TEST_CASE("interpolation reproduces x(1-x) with r = 2") {
  const auto space = build_space(square(0.25), 2);
  auto f = [](const Vec2& x) { return x.x() * (1.0 - x.x()); };
  const Vector full = lagrange_interpolate_full(*space, f);
  for (std::size_t n = 0; n < space->num_nodes(); ++n) CHECK(full[static_cast<Eigen::Index>(n)] == doctest::Approx(f(space->node_point(n))).epsilon(1e-13));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<Vec2> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(u(gen), u(gen));
  const Vector vals = evaluate_field(*space, full, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(vals[static_cast<Eigen::Index>(i)] == doctest::Approx(f(pts[i])).epsilon(1e-13));
  CHECK(evaluate_field(*space, Vector::Zero(static_cast<Eigen::Index>(space->num_dofs())), pts).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nested quadrature oracle") {
  for (int r = 1; r <= 2; ++r) {
    const auto coarse = build_space(square(0.25), r);
    const auto fine = build_space(refine_uniform(refine_uniform(coarse->mesh_ptr())), r);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector chi(static_cast<Eigen::Index>(coarse->num_dofs()));
    for (auto& c : chi) c = u(gen);
    const Vector full = coarse->to_full(chi);
    const PointSampler cq = quadrature_sampler(*coarse);
    const Vector vc = cq.value * full;
    double coarse_norm = 0.0;
    for (std::size_t k = 0; k < cq.weights.size(); ++k) coarse_norm += cq.weights[k] * vc[static_cast<Eigen::Index>(k)] * vc[static_cast<Eigen::Index>(k)];
    const PointSampler fq = quadrature_sampler(*fine);
    const PointSampler cross = cross_sampler(*coarse, fq);
    const Vector vf = cross.value * full;
    double fine_norm = 0.0;
    for (std::size_t k = 0; k < fq.weights.size(); ++k) fine_norm += fq.weights[k] * vf[static_cast<Eigen::Index>(k)] * vf[static_cast<Eigen::Index>(k)];
    CHECK(std::sqrt(fine_norm) == doctest::Approx(std::sqrt(coarse_norm)).epsilon(1e-12));
  }
}

TEST_CASE("sampler gradients of a linear function") {
  const auto space = build_space(square(0.25), 1);
  auto f = [](const Vec2& x) { return 2.0 * x.x() - 3.0 * x.y(); };
  const Vector full = lagrange_interpolate_full(*space, f);
  const PointSampler q = quadrature_sampler(*space);
  const Vector gx = q.dx * full, gy = q.dy * full;
  CHECK((gx.array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK((gy.array() + 3.0).abs().maxCoeff() < 1e-12);
}
