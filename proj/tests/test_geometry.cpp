#include "pfem/geometry.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace pfem;

TEST_CASE("structured unit square meshes") {
  const auto mesh = build_polygon_mesh(Polygon::unit_square(), 0.5);
  CHECK(mesh->num_triangles() == 8);
  CHECK(mesh->num_vertices() == 9);
  CHECK(mesh->h() == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-14));

  const auto fine = build_polygon_mesh(Polygon::unit_square(), 0.125);
  CHECK(fine->num_triangles() == 128);
  // Congruent elements share one shape-regularity value.
  const double K0 = fine->diameter(0) / fine->inradius(0);
  for (std::size_t t = 0; t < fine->num_triangles(); ++t)
    CHECK(fine->diameter(t) / fine->inradius(t) == doctest::Approx(K0).epsilon(1e-12));
  CHECK(measure_quality(*fine).K == doctest::Approx(K0).epsilon(1e-12));
}

TEST_CASE("hexagon generator quality stays near the structured baseline") {
  const double square_K = measure_quality(*build_polygon_mesh(Polygon::unit_square(), 0.25)).K;
  const auto hex = build_polygon_mesh(Polygon::regular(6, 1.0), 0.25);
  CHECK(measure_quality(*hex).K <= 2.0 * square_K);
}

TEST_CASE("red refinement") {
  const Mesh two({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}, {Triangle{0, 1, 2}, Triangle{0, 2, 3}});
  const MeshPtr base = std::make_shared<const Mesh>(two);
  const auto once = refine_uniform(base);
  CHECK(once->num_triangles() == 8);
  CHECK(once->h() == doctest::Approx(base->h() / 2).epsilon(1e-15));
  const auto twice = refine_uniform(once);
  CHECK(twice->num_triangles() == 32);
  REQUIRE(twice->generations_below(*base).has_value());
  CHECK(*twice->generations_below(*base) == 2);
  for (std::size_t t = 0; t < twice->num_triangles(); ++t) {
    const int anc = twice->ancestor_triangle(t, *base);
    const auto lam = barycentric(*base, static_cast<std::size_t>(anc), twice->centroid(t));
    for (double l : lam) CHECK(l >= -1e-12);
  }
  CHECK(measure_quality(*twice).K == doctest::Approx(measure_quality(*base).K).epsilon(1e-12));
}

TEST_CASE("closed-form triangle quantities") {
  const Mesh tri({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {Triangle{0, 1, 2}});
  CHECK(tri.h() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(tri.inradius(0) == doctest::Approx((2.0 - std::sqrt(2.0)) / 2).epsilon(1e-14));
  const double K8 = measure_quality(*build_polygon_mesh(Polygon::unit_square(), 0.125)).K;
  const double K32 = measure_quality(*build_polygon_mesh(Polygon::unit_square(), 1.0 / 32)).K;
  CHECK(K8 == doctest::Approx(K32).epsilon(1e-12));
}

TEST_CASE("point location") {
  const auto mesh = build_polygon_mesh(Polygon::unit_square(), 0.25);
  const auto loc = locate_point(mesh, mesh->centroid(5));
  CHECK(loc.triangle == 5);
  for (double l : loc.bary) CHECK(l == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // Midpoint of an interior edge goes to the lowest-index incident triangle.
  for (const auto& e : mesh->edges()) {
    if (e.right < 0) continue;
    const Vec2 mid = 0.5 * (mesh->vertices()[e.a] + mesh->vertices()[e.b]);
    CHECK(locate_point(mesh, mid).triangle == std::min(e.left, e.right));
    break;
  }

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto f = [](const Vec2& x) { return 0.3 + 1.7 * x.x() - 2.2 * x.y(); };
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(u(gen), u(gen));
    const auto l = locate_point(mesh, x);
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += l.bary[k] * f(mesh->vertex(static_cast<std::size_t>(l.triangle), k));
    CHECK(v == doctest::Approx(f(x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(locate_point(mesh, Vec2(1.5, 0.5)), DomainError);
}

TEST_CASE("domain metrics") {
  const auto sq = domain_metrics(Polygon::unit_square());
  CHECK(sq.R0 == doctest::Approx(1.0).epsilon(1e-14));
  const double d1 = std::pow(2.0, -4) * sq.R0 / (sq.K0 * sq.K0);
  CHECK(d1 > 0.0);
  const Polygon tri({Vec2(0, 0), Vec2(1, 0), Vec2(0.5, std::sqrt(3.0) / 2)});
  CHECK(domain_metrics(tri).R0 == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
}

TEST_CASE("polygon validation") {
  CHECK_THROWS_AS(Polygon({Vec2(0, 0), Vec2(1, 0), Vec2(0.5, 0.1), Vec2(1, 1), Vec2(0, 1)}), NonConvexPolygon);
  CHECK_THROWS_AS(build_polygon_mesh(Polygon::unit_square(), 0.0), InvalidInput);
}

TEST_CASE("mesh text round trip is bit exact") {
  const auto mesh = build_polygon_mesh(Polygon::regular(5, 1.3, Vec2(0.1, -0.2)), 0.3);
  std::ostringstream a;
  write_mesh(a, *mesh);
  std::istringstream in(a.str());
  const auto back = read_mesh(in);
  std::ostringstream b;
  write_mesh(b, *back);
  CHECK(a.str() == b.str());
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i) {
    CHECK(mesh->vertices()[i].x() == back->vertices()[i].x());
    CHECK(mesh->vertices()[i].y() == back->vertices()[i].y());
  }
  std::istringstream bad("3 1\n0 0 1\n1 0 1\n");
  CHECK_THROWS_AS(read_mesh(bad), InvalidInput);
}
