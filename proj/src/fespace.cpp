#include "pfem/fespace.hpp"

#include <algorithm>
#include <string>

namespace pfem {

// ---------------------------------------------------------------- LagrangeBasis

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1) throw InvalidInput("Lagrange degree must be >= 1");
  const int r = degree;
  nodes_.push_back({r, 0, 0});
  nodes_.push_back({0, r, 0});
  nodes_.push_back({0, 0, r});
  for (int k = 1; k < r; ++k) nodes_.push_back({r - k, k, 0});
  for (int k = 1; k < r; ++k) nodes_.push_back({0, r - k, k});
  for (int k = 1; k < r; ++k) nodes_.push_back({k, 0, r - k});
  for (int i1 = 1; i1 < r; ++i1)
    for (int i2 = 1; i1 + i2 < r; ++i2) nodes_.push_back({r - i1 - i2, i1, i2});
}

namespace {

// l_i(s) = prod_{q<i} (r s - q)/(q+1): equals 1 at s = i/r, 0 at s = 0..(i-1)/r.
double lagrange_factor(int i, int r, double s) {
  double v = 1.0;
  for (int q = 0; q < i; ++q) v *= (r * s - q) / (q + 1);
  return v;
}

double lagrange_factor_derivative(int i, int r, double s) {
  double d = 0.0;
  for (int p = 0; p < i; ++p) {
    double term = static_cast<double>(r) / (p + 1);
    for (int q = 0; q < i; ++q)
      if (q != p) term *= (r * s - q) / (q + 1);
    d += term;
  }
  return d;
}

}  // namespace

void LagrangeBasis::eval(const std::array<double, 3>& lam, std::span<double> values) const {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    values[k] = lagrange_factor(n[0], degree_, lam[0]) * lagrange_factor(n[1], degree_, lam[1]) *
                lagrange_factor(n[2], degree_, lam[2]);
  }
}

void LagrangeBasis::eval_dlambda(const std::array<double, 3>& lam, std::span<double> dvalues) const {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    double f[3], df[3];
    for (int m = 0; m < 3; ++m) {
      f[m] = lagrange_factor(n[m], degree_, lam[m]);
      df[m] = lagrange_factor_derivative(n[m], degree_, lam[m]);
    }
    dvalues[3 * k + 0] = df[0] * f[1] * f[2];
    dvalues[3 * k + 1] = f[0] * df[1] * f[2];
    dvalues[3 * k + 2] = f[0] * f[1] * df[2];
  }
}

// ---------------------------------------------------------------- FESpace

FESpace::FESpace(MeshPtr mesh, int degree, int quadrature_order)
    : mesh_(std::move(mesh)),
      locator_(std::make_unique<PointLocator>(mesh_)),
      basis_(degree),
      quad_(quadrature_order) {
  const Mesh& m = *mesh_;
  const int r = degree;
  const std::size_t nv = m.num_vertices();
  const std::size_t ne = m.edges().size();
  const std::size_t nt = m.num_triangles();
  const int per_edge = r - 1;
  const int per_cell = (r - 1) * (r - 2) / 2;
  const std::size_t nn = nv + ne * per_edge + nt * per_cell;
  const int nloc = basis_.size();

  node_points_.resize(nn);
  std::vector<bool> boundary(nn, false);
  for (std::size_t v = 0; v < nv; ++v) {
    node_points_[v] = m.vertices()[v];
    boundary[v] = m.boundary_flags()[v];
  }
  for (std::size_t e = 0; e < ne; ++e) {
    const Edge& ed = m.edges()[e];
    const Vec2& a = m.vertices()[ed.a];
    const Vec2& b = m.vertices()[ed.b];
    for (int k = 1; k <= per_edge; ++k) {
      const std::size_t n = nv + e * per_edge + (k - 1);
      node_points_[n] = a + (static_cast<double>(k) / r) * (b - a);
      boundary[n] = ed.right == -1;
    }
  }

  elem_nodes_.assign(nt * nloc, -1);
  for (std::size_t t = 0; t < nt; ++t) {
    int* loc = &elem_nodes_[t * nloc];
    const auto& tri = m.triangles()[t];
    for (int k = 0; k < 3; ++k) loc[k] = tri[k];
    int idx = 3;
    for (int le = 0; le < 3; ++le) {
      const int e = m.triangle_edges(t)[le];
      const bool forward = m.edges()[e].a == tri[le];
      for (int k = 1; k <= per_edge; ++k) {
        const int offset = forward ? k - 1 : per_edge - k;
        loc[idx++] = static_cast<int>(nv + e * per_edge + offset);
      }
    }
    for (int k = 0; k < per_cell; ++k) {
      const std::size_t n = nv + ne * per_edge + t * per_cell + k;
      loc[idx] = static_cast<int>(n);
      const auto& mi = basis_.node(idx);
      node_points_[n] = map_to_physical(t, {double(mi[0]) / r, double(mi[1]) / r, double(mi[2]) / r});
      ++idx;
    }
  }

  dof_of_node_.assign(nn, -1);
  for (std::size_t n = 0; n < nn; ++n) {
    if (!boundary[n]) {
      dof_of_node_[n] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(static_cast<int>(n));
    }
  }
}

std::span<const int> FESpace::element_nodes(std::size_t t) const {
  return {elem_nodes_.data() + t * basis_.size(), static_cast<std::size_t>(basis_.size())};
}

Eigen::Matrix<double, 3, 2> FESpace::grad_lambda(std::size_t t) const {
  const Vec2& a = mesh_->vertex(t, 0);
  const Vec2& b = mesh_->vertex(t, 1);
  const Vec2& c = mesh_->vertex(t, 2);
  const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
  Eigen::Matrix<double, 3, 2> g;
  g.row(1) = Vec2((c - a).y(), -(c - a).x()) / det;
  g.row(2) = Vec2(-(b - a).y(), (b - a).x()) / det;
  g.row(0) = -g.row(1) - g.row(2);
  return g;
}

Vector FESpace::to_full(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) == num_nodes()) return v;
  if (static_cast<std::size_t>(v.size()) != num_dofs()) {
    throw InvalidInput("vector length " + std::to_string(v.size()) +
                       " matches neither dofs nor nodes of the space");
  }
  Vector full = Vector::Zero(static_cast<Eigen::Index>(num_nodes()));
  for (std::size_t d = 0; d < num_dofs(); ++d) full[interior_nodes_[d]] = v[static_cast<Eigen::Index>(d)];
  return full;
}

Vector FESpace::to_dofs(const Vector& full) const {
  if (static_cast<std::size_t>(full.size()) == num_dofs()) return full;
  if (static_cast<std::size_t>(full.size()) != num_nodes()) throw InvalidInput("to_dofs: wrong vector length");
  Vector v(static_cast<Eigen::Index>(num_dofs()));
  for (std::size_t d = 0; d < num_dofs(); ++d) v[static_cast<Eigen::Index>(d)] = full[interior_nodes_[d]];
  return v;
}

Vec2 FESpace::map_to_physical(std::size_t t, const std::array<double, 3>& lam) const {
  return lam[0] * mesh_->vertex(t, 0) + lam[1] * mesh_->vertex(t, 1) + lam[2] * mesh_->vertex(t, 2);
}

FESpacePtr build_space(MeshPtr mesh, int degree, int quadrature_order) {
  if (degree < 1) throw InvalidInput("polynomial degree must be >= 1");
  if (quadrature_order < 2 * degree) {
    throw InvalidInput("quadrature order " + std::to_string(quadrature_order) +
                       " under-integrates the degree-" + std::to_string(degree) + " mass matrix");
  }
  return std::make_shared<const FESpace>(std::move(mesh), degree, quadrature_order);
}

FESpacePtr build_space(MeshPtr mesh, int degree) {
  return build_space(std::move(mesh), degree, 2 * degree + 2);
}

// ---------------------------------------------------------------- sampling

namespace {

struct SamplerBuilder {
  const FESpace& space;
  std::vector<Eigen::Triplet<double>> v, x, y;
  std::vector<double> phi, dphi;

  explicit SamplerBuilder(const FESpace& s)
      : space(s), phi(s.local_size()), dphi(3 * s.local_size()) {}

  void add(int row, std::size_t t, const std::array<double, 3>& lam) {
    space.basis().eval(lam, phi);
    space.basis().eval_dlambda(lam, dphi);
    const auto g = space.grad_lambda(t);
    const auto nodes = space.element_nodes(t);
    for (int k = 0; k < space.local_size(); ++k) {
      Vec2 grad = Vec2::Zero();
      for (int m = 0; m < 3; ++m) grad += dphi[3 * k + m] * g.row(m).transpose();
      v.emplace_back(row, nodes[k], phi[k]);
      x.emplace_back(row, nodes[k], grad.x());
      y.emplace_back(row, nodes[k], grad.y());
    }
  }

  void finish(PointSampler& s, std::size_t rows) {
    const auto r = static_cast<Eigen::Index>(rows);
    const auto c = static_cast<Eigen::Index>(space.num_nodes());
    s.value.resize(r, c);
    s.dx.resize(r, c);
    s.dy.resize(r, c);
    s.value.setFromTriplets(v.begin(), v.end());
    s.dx.setFromTriplets(x.begin(), x.end());
    s.dy.setFromTriplets(y.begin(), y.end());
  }
};

}  // namespace

PointSampler element_sampler(const FESpace& space, const std::vector<std::array<double, 3>>& bary,
                             const std::vector<double>& ref_weights) {
  const Mesh& m = space.mesh();
  PointSampler s;
  SamplerBuilder b(space);
  const std::size_t rows = m.num_triangles() * bary.size();
  s.points.reserve(rows);
  s.elements.reserve(rows);
  if (!ref_weights.empty()) s.weights.reserve(rows);
  int row = 0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.area(t);
    for (std::size_t q = 0; q < bary.size(); ++q) {
      s.points.push_back(space.map_to_physical(t, bary[q]));
      if (!ref_weights.empty()) s.weights.push_back(area * ref_weights[q]);
      s.elements.push_back(static_cast<int>(t));
      b.add(row++, t, bary[q]);
    }
  }
  b.finish(s, rows);
  return s;
}

PointSampler quadrature_sampler(const FESpace& space, int order) {
  const TriangleQuadrature quad(order < 0 ? space.quadrature_order() : order);
  return element_sampler(space, quad.points(), quad.weights());
}

PointSampler cross_sampler(const FESpace& space, const PointSampler& target) {
  PointSampler s;
  s.points = target.points;
  s.weights = target.weights;
  s.elements.reserve(target.points.size());
  SamplerBuilder b(space);
  for (std::size_t i = 0; i < target.points.size(); ++i) {
    const Location loc = space.locator().locate(target.points[i]);
    s.elements.push_back(loc.triangle);
    b.add(static_cast<int>(i), static_cast<std::size_t>(loc.triangle), loc.bary);
  }
  b.finish(s, target.points.size());
  return s;
}

PointSampler point_sampler(const FESpace& space, std::span<const Vec2> points) {
  PointSampler target;
  target.points.assign(points.begin(), points.end());
  return cross_sampler(space, target);
}

Vector evaluate_field(const FESpace& space, const Vector& coeffs, std::span<const Vec2> points) {
  const PointSampler s = point_sampler(space, points);
  return s.value * space.to_full(coeffs);
}

}  // namespace pfem
