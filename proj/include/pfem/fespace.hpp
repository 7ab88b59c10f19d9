#pragma once

#include "pfem/common.hpp"
#include "pfem/geometry.hpp"
#include "pfem/quadrature.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace pfem {

/// Lagrange basis of degree r on the reference triangle, in barycentric form.
///
/// Local node k has multi-index (i0, i1, i2) with i0+i1+i2 = r and sits at
/// sum_m (i_m / r) v_m. Order: the three vertices, then r-1 nodes on each
/// edge (v0v1, v1v2, v2v0) walking from the first vertex, then interior nodes.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::array<int, 3>& node(int k) const { return nodes_[k]; }

  /// Values of all basis functions at barycentric point lam.
  void eval(const std::array<double, 3>& lam, std::span<double> values) const;
  /// d phi_k / d lambda_m for all k (row-major, size() x 3).
  void eval_dlambda(const std::array<double, 3>& lam, std::span<double> dvalues) const;

 private:
  int degree_;
  std::vector<std::array<int, 3>> nodes_;
};

class FESpace;
using FESpacePtr = std::shared_ptr<const FESpace>;

/// Degree-r continuous Lagrange space on a mesh with homogeneous Dirichlet data.
///
/// Coefficient vectors come in two flavours: "full" nodal vectors indexed by
/// global node, and "dof" vectors restricted to interior nodes (S_h in H^1_0).
class FESpace {
 public:
  FESpace(MeshPtr mesh, int degree, int quadrature_order);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const PointLocator& locator() const { return *locator_; }
  int degree() const { return basis_.degree(); }
  const LagrangeBasis& basis() const { return basis_; }
  int quadrature_order() const { return quad_.order(); }
  const TriangleQuadrature& quadrature() const { return quad_; }

  std::size_t num_nodes() const { return node_points_.size(); }
  std::size_t num_dofs() const { return interior_nodes_.size(); }
  int local_size() const { return basis_.size(); }

  /// Global node numbers of element t in local basis order.
  std::span<const int> element_nodes(std::size_t t) const;
  const Vec2& node_point(std::size_t n) const { return node_points_[n]; }
  bool is_boundary_node(std::size_t n) const { return dof_of_node_[n] < 0; }
  /// Interior dof index of node n, -1 on the boundary.
  int dof_of_node(std::size_t n) const { return dof_of_node_[n]; }
  int node_of_dof(std::size_t d) const { return interior_nodes_[d]; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }

  /// Gradients of the barycentric coordinates on element t (row m = grad lambda_m).
  Eigen::Matrix<double, 3, 2> grad_lambda(std::size_t t) const;

  /// Accepts a dof or full vector and returns the full nodal vector.
  Vector to_full(const Vector& v) const;
  Vector to_dofs(const Vector& full) const;

  Vec2 map_to_physical(std::size_t t, const std::array<double, 3>& lam) const;

 private:
  MeshPtr mesh_;
  std::unique_ptr<PointLocator> locator_;
  LagrangeBasis basis_;
  TriangleQuadrature quad_;
  std::vector<int> elem_nodes_;
  std::vector<Vec2> node_points_;
  std::vector<int> dof_of_node_;
  std::vector<int> interior_nodes_;
};

/// Rejects r < 1 and quadrature orders below 2r.
FESpacePtr build_space(MeshPtr mesh, int degree, int quadrature_order);
/// Default quadrature order 2r+2.
FESpacePtr build_space(MeshPtr mesh, int degree);

/// Pointwise FE evaluation through point location and the local basis.
Vector evaluate_field(const FESpace& space, const Vector& coeffs, std::span<const Vec2> points);

/// Values and gradients of FE fields at a fixed set of points, as sparse operators
/// acting on full nodal vectors.
struct PointSampler {
  std::vector<Vec2> points;
  std::vector<double> weights;  // physical quadrature weights (empty for plain samples)
  std::vector<int> elements;
  RowSparseMatrix value;
  RowSparseMatrix dx;
  RowSparseMatrix dy;
};

/// Element quadrature points of `space` with physical weights.
PointSampler quadrature_sampler(const FESpace& space, int order = -1);
/// The same barycentric points on every element; weights are area * ref_weights when given.
PointSampler element_sampler(const FESpace& space, const std::vector<std::array<double, 3>>& bary,
                             const std::vector<double>& ref_weights = {});
/// Evaluation of `space` fields at the quadrature points of `target` (e.g. a nested fine space).
PointSampler cross_sampler(const FESpace& space, const PointSampler& target);
/// Evaluation at arbitrary points in the domain.
PointSampler point_sampler(const FESpace& space, std::span<const Vec2> points);

}  // namespace pfem
