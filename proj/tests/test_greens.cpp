#include "pfem/greens.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace pfem;

namespace {

const Polygon kSquare = Polygon::unit_square();
constexpr double kPi = std::numbers::pi;

// Dirichlet heat kernel of [0,1] by the method of images, 2K+1 image pairs.
double heat_1d(double x, double y, double t, int K = 10) {
  auto rho = [t](double z) { return std::exp(-z * z / (4.0 * t)) / std::sqrt(4.0 * kPi * t); };
  double s = 0.0;
  for (int k = -K; k <= K; ++k) s += rho(x - y + 2.0 * k) - rho(x + y + 2.0 * k);
  return s;
}

struct Setup {
  OperatorPairPtr pair;
  SpectralPtr spec;
};

Setup setup_on(MeshPtr mesh, int r = 1) {
  Setup s;
  s.pair = assemble(build_space(std::move(mesh), r), make_sample("identity", {}, kSquare));
  s.spec = std::make_shared<const SpectralDecomposition>(spectral_decompose(*s.pair));
  return s;
}

Setup square_setup(double h, int r = 1) { return setup_on(build_polygon_mesh(kSquare, h), r); }

DomainMetrics unit_metrics() {
  DomainMetrics m{};
  m.R0 = 1.0;
  m.K0 = 1.0;
  return m;
}

}  // namespace

TEST_CASE("discrete Green's function starts at the discrete delta") {
  const auto s = square_setup(0.125, 2);
  const Vec2 x0(0.4, 0.55);
  const auto grid = graded_grid(0.1, 10, 2.0);
  const GreenField g = discrete_green(*s.pair, s.spec, x0, grid);
  const DiscreteDelta dd = discrete_delta(*s.pair, x0);
  CHECK((g.initial - dd.coeffs).cwiseAbs().maxCoeff() <= 1e-12 * dd.coeffs.cwiseAbs().maxCoeff());
  const Matrix snap = g.synthesize({0.0, 0.05});
  CHECK((snap.col(0) - dd.coeffs).cwiseAbs().maxCoeff() <= 1e-10 * dd.coeffs.cwiseAbs().maxCoeff());
  // Time derivative agrees with a central difference.
  const Matrix d1 = g.synthesize({0.05}, 1);
  const Matrix fd = (g.synthesize({0.05 + 1e-6}) - g.synthesize({0.05 - 1e-6})) / 2e-6;
  CHECK((d1 - fd).cwiseAbs().maxCoeff() <= 1e-5 * d1.cwiseAbs().maxCoeff());
  const BochnerField f = g.field();
  CHECK(f.times == grid);
  CHECK(f.snapshots.size() == grid.size());
}

TEST_CASE("eigen-expansion kernel is symmetric") {
  const auto s = square_setup(0.125);
  const Vec2 x(0.3, 0.2), y(0.65, 0.7);
  for (double t : {0.001, 0.01, 0.1}) {
    const double a = eigen_kernel(*s.spec, x, y, t), b = eigen_kernel(*s.spec, y, x, t);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("discrete Green's function against the image-series heat kernel") {
  const auto s = square_setup(1.0 / 32);
  const Vec2 x0(0.5, 0.5);
  const double t = 0.05;
  const GreenField g = discrete_green(*s.pair, s.spec, x0, {0.0, t});
  const Vector gt = s.pair->space->to_full(g.synthesize({t}).col(0));
  const auto& V = s.pair->space->mesh().vertices();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    const double exact = heat_1d(V[i].x(), x0.x(), t) * heat_1d(V[i].y(), x0.y(), t);
    num += std::pow(gt[static_cast<Eigen::Index>(i)] - exact, 2);
    den += exact * exact;
  }
  CHECK(std::sqrt(num / den) <= 0.05);
  // The eigen-expansion kernel carries the same information at a point.
  CHECK(eigen_kernel(*s.spec, Vec2(0.3, 0.6), x0, t) ==
        doctest::Approx(heat_1d(0.3, 0.5, t) * heat_1d(0.6, 0.5, t)).epsilon(0.05));
}

TEST_CASE("dyadic decomposition") {
  const auto m = unit_metrics();
  const DyadicDecomposition dec = dyadic_decomposition(m, Vec2(0.5, 0.5), 1.0 / 64, 0.0625, 1.0);
  CHECK(dec.d(1) == 1.0 / 16);
  CHECK(dec.d(0) == 1.0 / 8);
  CHECK_FALSE(dec.trivial);
  // J* = floor(log2(R0 / (8 C* K0^2 h))).
  CHECK(dec.J_star == 7);
  CHECK(dec.shell_of(0.5) == 0);
  CHECK(dec.shell_of(2 * dec.d(1) - 1e-12) == 1);
  CHECK(dec.shell_of(dec.d(3)) == 3);
  CHECK(dec.shell_of(0.0) == dec.innermost());
  CHECK(dec.shell(Vec2(0.5, 0.5), dec.d(2) * dec.d(2)) == 2);
  const auto w = dec.widened(dec.J_star);
  CHECK(w.back() == dec.innermost());
  CHECK(w.front() == dec.J_star - 3);

  // Every point lands in exactly one shell.
  const auto space = build_space(build_polygon_mesh(kSquare, 1.0 / 16), 1);
  std::vector<Vec2> pts;
  for (std::size_t n = 0; n < space->num_nodes(); ++n) pts.push_back(space->node_point(n));
  const auto grid = graded_grid(1.0, 50, 2.0);
  const auto counts = shell_counts(dec, pts, grid);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == pts.size() * grid.size());
  CHECK(counts.size() == static_cast<std::size_t>(dec.J_star + 2));

  const DyadicDecomposition coarse = dyadic_decomposition(m, Vec2(0.5, 0.5), 0.5, 10.0, 1.0);
  CHECK(coarse.trivial);
  CHECK(coarse.shell_of(0.0) == 0);
  CHECK_THROWS_AS(dyadic_decomposition(m, Vec2(0.5, 0.5), 0.0, 1.0, 1.0), InvalidInput);
}

TEST_CASE("diagnostics vanish when the coarse and reference fields coincide") {
  const auto s = square_setup(1.0 / 16);
  const Vec2 x0(0.5, 0.5);
  const auto grid = graded_grid(0.25, 40, 2.0);
  const GreenField coarse = discrete_green(*s.pair, s.spec, x0, grid);
  const GreenField fine = reference_green(*s.pair, s.spec, *s.pair->space, x0, grid);
  const auto dec = dyadic_decomposition(unit_metrics(), x0, s.pair->space->mesh().h(), 0.0625, 0.25);
  REQUIRE(dec.J_star >= 1);
  const GreenDiagnostics d = green_diagnostics(coarse, fine, dec);
  CHECK(d.functionals.I1 <= 1e-12);
  CHECK(d.functionals.I2 <= 1e-12);
  CHECK(d.kappa.total <= 1e-10);
  for (const auto& l : d.local) CHECK(l.lhs <= 1e-10);
  CHECK(d.total_points > 0);
  CHECK_THROWS_AS(local_energy_ratio(coarse, fine, dec, 0), InvalidInput);
  CHECK_THROWS_AS(local_energy_ratio(coarse, fine, dec, dec.J_star + 1), InvalidInput);
}

TEST_CASE("nested diagnostics are finite and positive") {
  const auto c = square_setup(1.0 / 8);
  const auto f = setup_on(refine_uniform(c.pair->space->mesh_ptr()));
  const Vec2 x0(0.5, 0.5);
  const auto grid = graded_grid(0.25, 40, 2.0);
  const GreenField coarse = discrete_green(*c.pair, c.spec, x0, grid);
  const GreenField fine = reference_green(*f.pair, f.spec, *c.pair->space, x0, grid);
  const auto dec = dyadic_decomposition(unit_metrics(), x0, c.pair->space->mesh().h(), 0.0625, 0.25);
  const GreenFunctionals fn = green_error_functional(coarse, fine);
  CHECK(fn.I1 > 0.0);
  CHECK(std::isfinite(fn.I2));
  const KappaReport k = kappa_functional(coarse, fine, dec);
  CHECK(k.total > 0.0);
  CHECK(k.contributions.size() == k.d.size());
  CHECK_THROWS_AS(green_diagnostics(fine, coarse, dec), InvalidInput);

  const double l1 = l1_bound(coarse);
  CHECK(l1 >= 0.9);
  CHECK(std::isfinite(l1));
  const GaussianFit fit = gaussian_tail_fit(coarse, c.pair->space->mesh().h());
  CHECK(fit.C > 0.0);
  CHECK(fit.samples > 0);
}
