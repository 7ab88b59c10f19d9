#pragma once

#include "pfem/common.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pfem {

/// Raised when a polygon fails the strict-convexity check; carries the vertex where it failed.
class NonConvexPolygon : public InvalidInput {
 public:
  NonConvexPolygon(const std::string& what, std::size_t vertex)
      : InvalidInput(what), vertex_(vertex) {}
  std::size_t vertex() const { return vertex_; }

 private:
  std::size_t vertex_;
};

/// Strictly convex polygon, vertices counterclockwise.
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices);

  static Polygon unit_square();
  static Polygon regular(std::size_t n, double radius, Vec2 center = Vec2::Zero());

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }
  const Vec2& next(std::size_t i) const { return vertices_[(i + 1) % size()]; }

  double area() const;
  double shortest_edge() const;
  double longest_edge() const;
  double diameter() const;
  /// Interior angle at vertex i, radians.
  double interior_angle(std::size_t i) const;
  bool contains(const Vec2& x, double tol = 0.0) const;

 private:
  std::vector<Vec2> vertices_;
};

using Triangle = std::array<int, 3>;

class Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

struct Edge {
  int a;  // lower vertex index
  int b;
  int left;   // first incident triangle
  int right;  // second incident triangle or -1 on the boundary
};

/// Conforming triangulation with optional nested-refinement lineage.
///
/// Meshes are immutable once built. The constructor validates orientation,
/// edge manifoldness and hanging nodes, and recomputes the boundary flags from
/// the edge topology; supplied flags must agree with it.
class Mesh {
 public:
  Mesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
       std::optional<std::vector<bool>> boundary_flags = std::nullopt,
       MeshPtr parent = nullptr, std::vector<int> parent_triangle = {});

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Edge ids of triangle t in local order (v0v1, v1v2, v2v0).
  const std::array<int, 3>& triangle_edges(std::size_t t) const { return tri_edges_[t]; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const MeshPtr& parent() const { return parent_; }
  /// Index of the parent triangle containing child triangle t, or -1 without lineage.
  int parent_triangle(std::size_t t) const;
  /// Number of refinement steps between this mesh and `ancestor`, if it is one.
  std::optional<int> generations_below(const Mesh& ancestor) const;
  /// Triangle of `ancestor` that contains triangle t of this mesh.
  int ancestor_triangle(std::size_t t, const Mesh& ancestor) const;

  double h() const { return h_; }
  double area(std::size_t t) const;
  double diameter(std::size_t t) const;
  double inradius(std::size_t t) const;
  Vec2 centroid(std::size_t t) const;
  const Vec2& vertex(std::size_t t, int local) const { return vertices_[triangles_[t][local]]; }

 private:
  void build_edges();
  void validate_orientation() const;
  void check_hanging_nodes() const;

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  MeshPtr parent_;
  std::vector<int> parent_triangle_;
  double h_ = 0.0;
};

struct MeshQuality {
  double h;
  double rho_min;
  double K;
};

struct DomainMetrics {
  double R0;
  double K0;
  double min_angle;
  /// Individual covering bounds that entered K0.
  double corner_bound;
  double far_bound;
  std::string formula;
};

struct Location {
  int triangle;
  std::array<double, 3> bary;
};

/// Uniform bucket grid over the mesh bounding box for point location.
class PointLocator {
 public:
  explicit PointLocator(MeshPtr mesh);
  /// Lowest-index triangle containing x (within 1e-12 h); throws DomainError otherwise.
  Location locate(const Vec2& x) const;
  std::optional<Location> try_locate(const Vec2& x) const;
  const Mesh& mesh() const { return *mesh_; }

 private:
  std::size_t cell_of(double v, int axis) const;

  MeshPtr mesh_;
  Vec2 lo_, hi_;
  std::size_t nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
};

/// Barycentric coordinates of x with respect to triangle t (unclamped).
std::array<double, 3> barycentric(const Mesh& mesh, std::size_t t, const Vec2& x);

/// Structured template mesh refined until every boundary segment is at most target_h.
///
/// Triangles are used as-is, quadrilaterals are cut along their shorter
/// diagonal, larger polygons are fanned from the vertex centroid.
MeshPtr build_polygon_mesh(const Polygon& polygon, double target_h);

/// Red refinement: every triangle split into four similar children at edge midpoints.
MeshPtr refine_uniform(const MeshPtr& mesh);

MeshQuality measure_quality(const Mesh& mesh);

Location locate_point(const MeshPtr& mesh, const Vec2& x);

DomainMetrics domain_metrics(const Polygon& polygon);

/// Plain-text mesh format: "nv nt", then "x y flag" rows, then "i j k" rows.
void write_mesh(std::ostream& os, const Mesh& mesh);
MeshPtr read_mesh(std::istream& is);
void save_mesh(const std::string& path, const Mesh& mesh);
MeshPtr load_mesh(const std::string& path);

}  // namespace pfem
