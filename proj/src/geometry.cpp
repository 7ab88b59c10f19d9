#include "pfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace pfem {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace

// ---------------------------------------------------------------- Polygon

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw InvalidInput("polygon needs at least 3 vertices");
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, (next(i) - vertices_[i]).norm());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((vertices_[i] - vertices_[j]).norm() <= 1e-12 * scale) {
        throw NonConvexPolygon("polygon has repeated vertex " + std::to_string(j), j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = vertices_[(i + n - 1) % n];
    const Vec2 e0 = vertices_[i] - prev;
    const Vec2 e1 = next(i) - vertices_[i];
    if (cross(e0, e1) <= 1e-12 * e0.norm() * e1.norm()) {
      throw NonConvexPolygon("polygon is not strictly convex (counterclockwise) at vertex " +
                                 std::to_string(i),
                             i);
    }
  }
}

Polygon Polygon::unit_square() {
  return Polygon({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)});
}

Polygon Polygon::regular(std::size_t n, double radius, Vec2 center) {
  std::vector<Vec2> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    v.emplace_back(center + radius * Vec2(std::cos(a), std::sin(a)));
  }
  return Polygon(std::move(v));
}

double Polygon::area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < size(); ++i) a += cross(vertices_[i], next(i));
  return 0.5 * a;
}

double Polygon::shortest_edge() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) m = std::min(m, (next(i) - vertices_[i]).norm());
  return m;
}

double Polygon::longest_edge() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, (next(i) - vertices_[i]).norm());
  return m;
}

double Polygon::diameter() const {
  double d = 0.0;
  for (const auto& a : vertices_)
    for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
  return d;
}

double Polygon::interior_angle(std::size_t i) const {
  const std::size_t n = size();
  const Vec2 a = vertices_[(i + n - 1) % n] - vertices_[i];
  const Vec2 b = next(i) - vertices_[i];
  return std::atan2(std::abs(cross(a, b)), a.dot(b));
}

bool Polygon::contains(const Vec2& x, double tol) const {
  for (std::size_t i = 0; i < size(); ++i) {
    const Vec2 e = next(i) - vertices_[i];
    if (cross(e, x - vertices_[i]) / e.norm() < -tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------- Mesh

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
           std::optional<std::vector<bool>> boundary_flags, MeshPtr parent,
           std::vector<int> parent_triangle)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      parent_(std::move(parent)),
      parent_triangle_(std::move(parent_triangle)) {
  if (triangles_.empty()) throw InvalidInput("mesh has no triangles");
  for (const auto& t : triangles_) {
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= vertices_.size()) {
        throw InvalidInput("triangle references vertex " + std::to_string(v) + " out of range");
      }
    }
  }
  if (parent_ && parent_triangle_.size() != triangles_.size()) {
    throw InvalidInput("parent lineage must map every child triangle");
  }
  validate_orientation();
  build_edges();
  check_hanging_nodes();

  if (boundary_flags) {
    if (boundary_flags->size() != vertices_.size() || *boundary_flags != boundary_) {
      throw InvalidInput("boundary flags do not match the boundary edges of the mesh");
    }
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t) h_ = std::max(h_, diameter(t));
}

void Mesh::validate_orientation() const {
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Vec2& a = vertex(t, 0);
    const Vec2& b = vertex(t, 1);
    const Vec2& c = vertex(t, 2);
    const double scale = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    if (cross(b - a, c - a) <= 1e-12 * scale) {
      throw InvalidInput("triangle " + std::to_string(t) + " is degenerate or clockwise");
    }
  }
}

void Mesh::build_edges() {
  std::map<std::pair<int, int>, int> lookup;
  std::map<std::pair<int, int>, int> directed;
  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int u = triangles_[t][k];
      const int w = triangles_[t][(k + 1) % 3];
      if (!directed.emplace(std::make_pair(u, w), static_cast<int>(t)).second) {
        throw InvalidInput("mesh is not conforming: directed edge (" + std::to_string(u) + "," +
                           std::to_string(w) + ") used twice");
      }
      const auto key = std::minmax(u, w);
      auto [it, inserted] = lookup.emplace(key, static_cast<int>(edges_.size()));
      if (inserted) {
        edges_.push_back({key.first, key.second, static_cast<int>(t), -1});
      } else {
        Edge& e = edges_[it->second];
        if (e.right != -1) throw InvalidInput("mesh is not conforming: edge with three triangles");
        e.right = static_cast<int>(t);
      }
      tri_edges_[t][k] = it->second;
    }
  }
  boundary_.assign(vertices_.size(), false);
  for (const auto& e : edges_) {
    if (e.right == -1) {
      boundary_[e.a] = true;
      boundary_[e.b] = true;
    }
  }
}

void Mesh::check_hanging_nodes() const {
  // Bucket the edges and look for vertices lying strictly inside one.
  Vec2 lo = vertices_.front(), hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(edges_.size()))));
  const Vec2 span = (hi - lo).cwiseMax(Vec2::Constant(1e-300));
  auto cell = [&](double v, double l, double s) {
    return std::min(n - 1, static_cast<std::size_t>(std::max(0.0, (v - l) / s * static_cast<double>(n))));
  };
  std::vector<std::vector<int>> buckets(n * n);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Vec2& a = vertices_[edges_[e].a];
    const Vec2& b = vertices_[edges_[e].b];
    const Vec2 elo = a.cwiseMin(b), ehi = a.cwiseMax(b);
    for (std::size_t i = cell(elo.x(), lo.x(), span.x()); i <= cell(ehi.x(), lo.x(), span.x()); ++i)
      for (std::size_t j = cell(elo.y(), lo.y(), span.y()); j <= cell(ehi.y(), lo.y(), span.y()); ++j)
        buckets[i * n + j].push_back(static_cast<int>(e));
  }
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    const Vec2& p = vertices_[v];
    for (int e : buckets[cell(p.x(), lo.x(), span.x()) * n + cell(p.y(), lo.y(), span.y())]) {
      const Edge& ed = edges_[e];
      if (ed.a == static_cast<int>(v) || ed.b == static_cast<int>(v)) continue;
      const Vec2& a = vertices_[ed.a];
      const Vec2& b = vertices_[ed.b];
      const double len = (b - a).norm();
      const double s = (p - a).dot(b - a) / (len * len);
      if (s > 1e-12 && s < 1.0 - 1e-12 && std::abs(cross(b - a, p - a)) / len <= 1e-12 * len) {
        throw InvalidInput("mesh is not conforming: hanging vertex " + std::to_string(v));
      }
    }
  }
}

int Mesh::parent_triangle(std::size_t t) const {
  return parent_ ? parent_triangle_[t] : -1;
}

std::optional<int> Mesh::generations_below(const Mesh& ancestor) const {
  int g = 0;
  for (const Mesh* m = this; m != nullptr; m = m->parent_.get(), ++g) {
    if (m == &ancestor) return g;
  }
  return std::nullopt;
}

int Mesh::ancestor_triangle(std::size_t t, const Mesh& ancestor) const {
  int tri = static_cast<int>(t);
  for (const Mesh* m = this; m != nullptr; m = m->parent_.get()) {
    if (m == &ancestor) return tri;
    tri = m->parent_triangle(static_cast<std::size_t>(tri));
  }
  throw InvalidInput("mesh is not a nested refinement of the requested ancestor");
}

double Mesh::area(std::size_t t) const {
  return 0.5 * cross(vertex(t, 1) - vertex(t, 0), vertex(t, 2) - vertex(t, 0));
}

double Mesh::diameter(std::size_t t) const {
  const Vec2& a = vertex(t, 0);
  const Vec2& b = vertex(t, 1);
  const Vec2& c = vertex(t, 2);
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double Mesh::inradius(std::size_t t) const {
  const Vec2& a = vertex(t, 0);
  const Vec2& b = vertex(t, 1);
  const Vec2& c = vertex(t, 2);
  const double perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
  return 2.0 * area(t) / perimeter;
}

Vec2 Mesh::centroid(std::size_t t) const {
  return (vertex(t, 0) + vertex(t, 1) + vertex(t, 2)) / 3.0;
}

// ---------------------------------------------------------------- construction

MeshPtr build_polygon_mesh(const Polygon& polygon, double target_h) {
  if (!(target_h > 0.0) || !std::isfinite(target_h)) {
    throw InvalidInput("target_h must be a positive finite number");
  }
  if (target_h > polygon.shortest_edge() * (1.0 + 1e-12)) {
    throw InvalidInput("target_h exceeds the shortest polygon edge");
  }
  std::vector<Vec2> verts = polygon.vertices();
  std::vector<Triangle> tris;
  const int n = static_cast<int>(polygon.size());
  if (n == 3) {
    tris.push_back({0, 1, 2});
  } else if (n == 4) {
    const double d02 = (verts[2] - verts[0]).norm();
    const double d13 = (verts[3] - verts[1]).norm();
    if (d02 <= d13 * (1.0 + 1e-12)) {
      tris.push_back({0, 1, 2});
      tris.push_back({0, 2, 3});
    } else {
      tris.push_back({0, 1, 3});
      tris.push_back({1, 2, 3});
    }
  } else {
    Vec2 c = Vec2::Zero();
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(n);
    verts.push_back(c);
    for (int i = 0; i < n; ++i) tris.push_back({i, (i + 1) % n, n});
  }
  MeshPtr mesh = std::make_shared<const Mesh>(std::move(verts), std::move(tris));

  auto boundary_segment = [](const Mesh& m) {
    double s = 0.0;
    for (const auto& e : m.edges())
      if (e.right == -1) s = std::max(s, (m.vertices()[e.b] - m.vertices()[e.a]).norm());
    return s;
  };
  while (boundary_segment(*mesh) > target_h * (1.0 + 1e-12)) mesh = refine_uniform(mesh);
  return mesh;
}

MeshPtr refine_uniform(const MeshPtr& mesh) {
  if (!mesh) throw InvalidInput("refine_uniform: null mesh");
  std::vector<Vec2> verts = mesh->vertices();
  const int nv = static_cast<int>(verts.size());
  for (const auto& e : mesh->edges()) verts.push_back(0.5 * (verts[e.a] + verts[e.b]));
  std::vector<Triangle> tris;
  std::vector<int> parent;
  tris.reserve(4 * mesh->num_triangles());
  parent.reserve(4 * mesh->num_triangles());
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    const auto& v = mesh->triangles()[t];
    const auto& e = mesh->triangle_edges(t);
    const int m01 = nv + e[0], m12 = nv + e[1], m20 = nv + e[2];
    tris.push_back({v[0], m01, m20});
    tris.push_back({m01, v[1], m12});
    tris.push_back({m20, m12, v[2]});
    tris.push_back({m01, m12, m20});
    for (int k = 0; k < 4; ++k) parent.push_back(static_cast<int>(t));
  }
  return std::make_shared<const Mesh>(std::move(verts), std::move(tris), std::nullopt, mesh,
                                      std::move(parent));
}

MeshQuality measure_quality(const Mesh& mesh) {
  MeshQuality q{0.0, std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    q.h = std::max(q.h, mesh.diameter(t));
    q.rho_min = std::min(q.rho_min, mesh.inradius(t));
  }
  q.K = q.h / q.rho_min;
  return q;
}

// ---------------------------------------------------------------- location

std::array<double, 3> barycentric(const Mesh& mesh, std::size_t t, const Vec2& x) {
  const Vec2& a = mesh.vertex(t, 0);
  const Vec2& b = mesh.vertex(t, 1);
  const Vec2& c = mesh.vertex(t, 2);
  const double det = cross(b - a, c - a);
  const double l1 = cross(x - a, c - a) / det;
  const double l2 = cross(b - a, x - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const auto& v = mesh_->vertices();
  lo_ = v.front();
  hi_ = v.front();
  for (const auto& p : v) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  const double pad = 1e-9 * std::max(1.0, (hi_ - lo_).norm());
  lo_ -= Vec2::Constant(pad);
  hi_ += Vec2::Constant(pad);
  const double h = mesh_->h();
  nx_ = std::clamp<std::size_t>(static_cast<std::size_t>((hi_.x() - lo_.x()) / h), 1, 4096);
  ny_ = std::clamp<std::size_t>(static_cast<std::size_t>((hi_.y() - lo_.y()) / h), 1, 4096);
  cells_.assign(nx_ * ny_, {});
  const double tol = 1e-12 * h;
  for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
    Vec2 tlo = mesh_->vertex(t, 0), thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(mesh_->vertex(t, k));
      thi = thi.cwiseMax(mesh_->vertex(t, k));
    }
    tlo -= Vec2::Constant(tol);
    thi += Vec2::Constant(tol);
    for (std::size_t i = cell_of(tlo.x(), 0); i <= cell_of(thi.x(), 0); ++i)
      for (std::size_t j = cell_of(tlo.y(), 1); j <= cell_of(thi.y(), 1); ++j)
        cells_[i * ny_ + j].push_back(static_cast<int>(t));
  }
}

std::size_t PointLocator::cell_of(double v, int axis) const {
  const std::size_t n = axis == 0 ? nx_ : ny_;
  const double s = (v - lo_[axis]) / (hi_[axis] - lo_[axis]) * static_cast<double>(n);
  if (s <= 0.0) return 0;
  return std::min(n - 1, static_cast<std::size_t>(s));
}

std::optional<Location> PointLocator::try_locate(const Vec2& x) const {
  if (x.x() < lo_.x() || x.y() < lo_.y() || x.x() > hi_.x() || x.y() > hi_.y()) return std::nullopt;
  const double tol = 1e-12 * mesh_->h();
  const auto& bucket = cells_[cell_of(x.x(), 0) * ny_ + cell_of(x.y(), 1)];
  for (int t : bucket) {  // buckets are filled in ascending triangle order
    auto lam = barycentric(*mesh_, static_cast<std::size_t>(t), x);
    const double twice_area = 2.0 * mesh_->area(static_cast<std::size_t>(t));
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
      const Vec2& p = mesh_->vertex(static_cast<std::size_t>(t), (k + 1) % 3);
      const Vec2& q = mesh_->vertex(static_cast<std::size_t>(t), (k + 2) % 3);
      const double altitude = twice_area / (q - p).norm();
      if (lam[k] * altitude < -tol) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    double sum = 0.0;
    for (double& l : lam) {
      l = std::clamp(l, 0.0, 1.0);
      sum += l;
    }
    for (double& l : lam) l /= sum;
    return Location{t, lam};
  }
  return std::nullopt;
}

Location PointLocator::locate(const Vec2& x) const {
  auto loc = try_locate(x);
  if (!loc) {
    std::ostringstream os;
    os << "point (" << x.x() << ", " << x.y() << ") lies outside the mesh";
    throw DomainError(os.str());
  }
  return *loc;
}

Location locate_point(const MeshPtr& mesh, const Vec2& x) { return PointLocator(mesh).locate(x); }

// ---------------------------------------------------------------- domain constants

DomainMetrics domain_metrics(const Polygon& polygon) {
  const std::size_t n = polygon.size();
  double R0 = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t e = 0; e < n; ++e) {
      const std::size_t e1 = (e + 1) % n;
      if (e == v || e1 == v) continue;
      R0 = std::min(R0, point_segment_distance(polygon[v], polygon[e], polygon[e1]));
    }
  }
  double min_angle = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) min_angle = std::min(min_angle, polygon.interior_angle(i));

  // A ball centred on one side that reaches an adjacent side at a corner of
  // angle theta has radius >= s*sin(theta) (theta < pi/2) or >= s (theta >= pi/2),
  // s being the distance to the corner, so it sits in B((1 + 1/sin theta) rho) around it.
  const double corner_bound =
      min_angle < 0.5 * std::numbers::pi ? 1.0 + 1.0 / std::sin(min_angle) : 2.0;
  // Reaching a non-adjacent side needs rho >= R0, and the nearest corner is at most
  // half a side away.
  const double far_bound = n > 3 ? 1.0 + polygon.longest_edge() / (2.0 * R0) : 1.0;
  const double K0 = std::max({1.0, R0, corner_bound, far_bound});
  return {R0, K0, min_angle, corner_bound, far_bound,
          "K0 = max(1, R0, 1 + 1/sin(min(theta_min, pi/2)) [2 if theta_min >= pi/2], "
          "1 + L_max/(2 R0) [polygons with non-adjacent sides])"};
}

}  // namespace pfem
