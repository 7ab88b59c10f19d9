#include "pfem/projections.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pfem {

Vector l2_project(const OperatorPair& pair, const ScalarFunction& f, int quadrature_order) {
  const Vector load = pair.restrict(load_vector(*pair.space, f, quadrature_order));
  const Vector c = pair.solve_mass(load);
  const double res = (pair.M * c - load).norm();
  if (res > 1e-12 * std::max(load.norm(), 1e-300) && res > 1e-300) {
    throw InternalError("mass solve residual " + std::to_string(res) + " above 1e-12 relative");
  }
  return c;
}

Vector ritz_project(const OperatorPair& pair, const ScalarFunction& f, const GradientFunction& grad_f,
                    int quadrature_order) {
  const FESpace& space = *pair.space;
  double scale = 1.0;
  for (std::size_t n = 0; n < space.num_nodes(); ++n) scale = std::max(scale, std::abs(f(space.node_point(n))));
  for (std::size_t n = 0; n < space.num_nodes(); ++n) {
    if (!space.is_boundary_node(n)) continue;
    const Vec2& x = space.node_point(n);
    if (std::abs(f(x)) > 1e-10 * scale) {
      throw InvalidInput("ritz_project: f does not vanish on the boundary at (" + std::to_string(x.x()) + ", " +
                         std::to_string(x.y()) + ")");
    }
  }
  const auto& a = *pair.coefficient;
  const Vector load = pair.restrict(divergence_load(
      space, [&](const Vec2& x) -> Vec2 { return a.eval(x) * grad_f(x); }, quadrature_order));
  return pair.solve_stiffness(load);
}

Vector lagrange_interpolate_full(const FESpace& space, const ScalarFunction& f) {
  Vector v(static_cast<Eigen::Index>(space.num_nodes()));
  for (std::size_t n = 0; n < space.num_nodes(); ++n) v[static_cast<Eigen::Index>(n)] = f(space.node_point(n));
  return v;
}

Vector lagrange_interpolate(const FESpace& space, const ScalarFunction& f) {
  Vector v(static_cast<Eigen::Index>(space.num_dofs()));
  for (std::size_t d = 0; d < space.num_dofs(); ++d)
    v[static_cast<Eigen::Index>(d)] = f(space.node_point(static_cast<std::size_t>(space.node_of_dof(d))));
  return v;
}

Vector clement_interpolate(const FESpace& space, const ScalarFunction& f, int quadrature_order) {
  const TriangleQuadrature quad(quadrature_order > 0 ? quadrature_order : space.quadrature_order());
  const Mesh& m = space.mesh();
  std::vector<double> integral(space.num_nodes(), 0.0), measure(space.num_nodes(), 0.0);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.area(t);
    double sum = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) sum += quad.weights()[q] * f(space.map_to_physical(t, quad.points()[q]));
    for (int n : space.element_nodes(t)) {
      integral[n] += area * sum;
      measure[n] += area;
    }
  }
  Vector v(static_cast<Eigen::Index>(space.num_dofs()));
  for (std::size_t d = 0; d < space.num_dofs(); ++d) {
    const auto n = static_cast<std::size_t>(space.node_of_dof(d));
    v[static_cast<Eigen::Index>(d)] = integral[n] / measure[n];
  }
  return v;
}

double patch_constant(const FESpace& space) {
  const Mesh& m = space.mesh();
  std::vector<double> reach(space.num_nodes(), 0.0);
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    for (int n : space.element_nodes(t))
      for (int k = 0; k < 3; ++k) reach[n] = std::max(reach[n], (m.vertex(t, k) - space.node_point(n)).norm());
  return *std::max_element(reach.begin(), reach.end()) / m.h();
}

// ---------------------------------------------------------------- regularized delta

double RegularizedDelta::at_barycentric(const std::array<double, 3>& lam) const {
  for (double l : lam)
    if (l < 0.0) return 0.0;
  const LagrangeBasis basis(degree);
  std::vector<double> phi(basis.size());
  basis.eval(lam, phi);
  double q = 0.0;
  for (int k = 0; k < basis.size(); ++k) q += poly_coeffs[k] * phi[k];
  return q * std::pow(lam[0] * lam[1] * lam[2], bump_power);
}

double RegularizedDelta::operator()(const Vec2& x) const {
  const Vec2 e1 = vertices[1] - vertices[0], e2 = vertices[2] - vertices[0], r = x - vertices[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  const double l1 = (r.x() * e2.y() - r.y() * e2.x()) / det;
  const double l2 = (e1.x() * r.y() - e1.y() * r.x()) / det;
  return at_barycentric({1.0 - l1 - l2, l1, l2});
}

double RegularizedDelta::lp_norm(double p) const {
  const Vec2 e1 = vertices[1] - vertices[0], e2 = vertices[2] - vertices[0];
  const double area = 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  if (std::isinf(p)) {
    double mx = 0.0;
    const int n = 60;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; i + j <= n; ++j) {
        const double l1 = double(i) / n, l2 = double(j) / n;
        mx = std::max(mx, std::abs(at_barycentric({1.0 - l1 - l2, l1, l2})));
      }
    return mx;
  }
  const TriangleQuadrature quad(40);
  double s = 0.0;
  for (std::size_t q = 0; q < quad.size(); ++q) s += quad.weights()[q] * std::pow(std::abs(at_barycentric(quad.points()[q])), p);
  return std::pow(area * s, 1.0 / p);
}

RegularizedDelta regularized_delta(const FESpace& space, const Vec2& x0) {
  const Location loc = space.locator().locate(x0);
  const Mesh& m = space.mesh();
  RegularizedDelta d;
  d.x0 = x0;
  d.element = loc.triangle;
  d.degree = space.degree();
  for (int k = 0; k < 3; ++k) d.vertices[k] = m.vertex(static_cast<std::size_t>(loc.triangle), k);

  // Moment system G c = e, G_ik = int phi_i phi_k b, e_i = phi_i(x0), integrated exactly
  // (integrand degree 2r + 3 * bump_power).
  const LagrangeBasis& basis = space.basis();
  const int n = basis.size();
  const TriangleQuadrature quad(2 * d.degree + 3 * d.bump_power);
  const double area = m.area(static_cast<std::size_t>(loc.triangle));
  Matrix G = Matrix::Zero(n, n);
  std::vector<double> phi(n);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const auto& lam = quad.points()[q];
    basis.eval(lam, phi);
    const double w = area * quad.weights()[q] * std::pow(lam[0] * lam[1] * lam[2], d.bump_power);
    const Eigen::Map<const Vector> pv(phi.data(), n);
    G.noalias() += w * pv * pv.transpose();
  }
  basis.eval(loc.bary, phi);
  const Eigen::Map<const Vector> e(phi.data(), n);
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) throw InternalError("regularized delta moment matrix is not positive definite");
  const Vector c = llt.solve(e);
  d.poly_coeffs.assign(c.data(), c.data() + n);
  return d;
}

Vector delta_load(const FESpace& space, const Vec2& x0) {
  const Location loc = space.locator().locate(x0);
  std::vector<double> phi(space.local_size());
  space.basis().eval(loc.bary, phi);
  Vector b = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
  const auto nodes = space.element_nodes(static_cast<std::size_t>(loc.triangle));
  for (int k = 0; k < space.local_size(); ++k) b[nodes[k]] = phi[k];
  return b;
}

DecayFit fit_decay(const FESpace& space, const Vector& values, const Vec2& x0, double max_distance) {
  const Vector full = space.to_full(values);
  const double h = space.mesh().h();
  const double peak = full.cwiseAbs().maxCoeff();
  const int nb = static_cast<int>(std::ceil(max_distance));
  std::vector<double> envelope(static_cast<std::size_t>(nb), 0.0);
  for (std::size_t n = 0; n < space.num_nodes(); ++n) {
    const double s = (space.node_point(n) - x0).norm() / h;
    if (s >= max_distance) continue;
    auto& e = envelope[static_cast<std::size_t>(s)];
    e = std::max(e, std::abs(full[static_cast<Eigen::Index>(n)]));
  }
  std::vector<double> xs, ys;
  for (int b = 0; b < nb; ++b) {
    if (envelope[b] > 1e-12 * peak && envelope[b] > 0.0) {
      xs.push_back(b + 0.5);
      ys.push_back(std::log(envelope[b]));
    }
  }
  DecayFit fit;
  fit.bins = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    fit.amplitude = peak;
    return fit;
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / k;
    my += ys[i] / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss += r * r;
  }
  fit.amplitude = std::exp(intercept);
  fit.rate = -slope;
  fit.residual = std::sqrt(ss / k);
  return fit;
}

DiscreteDelta discrete_delta(const OperatorPair& pair, const Vec2& x0) {
  DiscreteDelta out;
  out.coeffs = pair.solve_mass(pair.restrict(delta_load(*pair.space, x0)));
  out.fit = fit_decay(*pair.space, out.coeffs, x0);
  return out;
}

// ---------------------------------------------------------------- superapproximation

Smoothstep::Smoothstep(int n) : coeffs_(static_cast<std::size_t>(2 * n + 2), 0.0) {
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  for (int j = 0; j <= n; ++j)
    coeffs_[static_cast<std::size_t>(n + 1 + j)] = binom(n + j, j) * binom(2 * n + 1, n - j) * (j % 2 ? -1.0 : 1.0);
}

double Smoothstep::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double v = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * s + *it;
  return v;
}

double Smoothstep::derivative(double s) const {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  double v = 0.0;
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) v = v * s + static_cast<double>(k) * coeffs_[k];
  return v;
}

double Smoothstep::max_slope() const {
  double m = 0.0;
  for (int i = 0; i <= 1000; ++i) m = std::max(m, std::abs(derivative(i / 1000.0)));
  return m;
}

SuperapproxReport superapprox_check(const OperatorPair& pair, const Disk& D, double d, const Vector& psi_h) {
  const FESpace& space = *pair.space;
  SuperapproxReport rep;
  rep.h = space.mesh().h();
  rep.d = d;
  rep.kappa = patch_constant(space);
  if (!(d >= 10.0 * rep.kappa * rep.h)) {
    throw InvalidInput("superapprox_check: d = " + std::to_string(d) + " is below 10 kappa h = " +
                       std::to_string(10.0 * rep.kappa * rep.h));
  }
  const Smoothstep S(space.degree() + 1);
  rep.cutoff_constant = S.max_slope();
  const Vec2 c = D.center;
  const double R = D.radius;
  auto omega = [&](const Vec2& x) { return S((R - (x - c).norm()) / d); };
  auto omega_grad = [&](const Vec2& x) -> Vec2 {
    const Vec2 y = x - c;
    const double r = y.norm();
    if (r == 0.0) return Vec2::Zero();
    return -S.derivative((R - r) / d) / (d * r) * y;
  };
  auto omega_tilde = [&](const Vec2& x) { return S((R + 0.8 * d - (x - c).norm()) / (0.1 * d)); };

  const PointSampler qs = quadrature_sampler(space, 2 * space.degree() + 4);
  const Vector psi = space.to_full(psi_h);
  const Vector pv = qs.value * psi, px = qs.dx * psi, py = qs.dy * psi;
  const auto nq = static_cast<Eigen::Index>(qs.points.size());

  // Load (a grad(omega psi), grad phi_i) through the transposed sampler gradients.
  Vector gx(nq), gy(nq), wpsi(nq);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Vec2& x = qs.points[static_cast<std::size_t>(q)];
    const double w = qs.weights[static_cast<std::size_t>(q)];
    const double om = omega(x);
    wpsi[q] = om * pv[q];
    const Vec2 g = pv[q] * omega_grad(x) + om * Vec2(px[q], py[q]);
    const Vec2 ag = pair.coefficient->eval(x) * g;
    gx[q] = w * ag.x();
    gy[q] = w * ag.y();
  }
  const Vector load_full = qs.dx.transpose() * gx + qs.dy.transpose() * gy;
  const Vector Rw = space.to_full(pair.solve_stiffness(pair.restrict(load_full)));

  Vector chi(Rw.size());
  for (Eigen::Index n = 0; n < Rw.size(); ++n) chi[n] = omega_tilde(space.node_point(static_cast<std::size_t>(n))) * Rw[n];

  const Vector e = Rw - chi;
  const Vector ev = qs.value * e, ex = qs.dx * e, ey = qs.dy * e, cv = qs.value * chi;
  double h1 = 0.0, l2 = 0.0, rhs = 0.0;
  for (Eigen::Index q = 0; q < nq; ++q) {
    const double w = qs.weights[static_cast<std::size_t>(q)];
    h1 += w * (ev[q] * ev[q] + ex[q] * ex[q] + ey[q] * ey[q]);
    const double r = wpsi[q] - cv[q];
    l2 += w * r * r;
    if ((qs.points[static_cast<std::size_t>(q)] - c).norm() <= R + d) rhs += w * pv[q] * pv[q];
  }
  rep.ritz_term = d * d * std::sqrt(h1);
  rep.l2_term = d * std::sqrt(l2);
  rep.lhs = rep.ritz_term + rep.l2_term;
  rep.rhs = rep.h * std::sqrt(rhs);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace pfem
