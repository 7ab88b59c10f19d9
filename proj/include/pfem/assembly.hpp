#pragma once

#include "pfem/coefficient.hpp"
#include "pfem/common.hpp"
#include "pfem/fespace.hpp"

#include <Eigen/SparseCholesky>

#include <iosfwd>
#include <memory>

namespace pfem {

/// Mass and coefficient-weighted stiffness on a space, plus cached factorizations.
///
/// M and A act on interior dofs (Dirichlet elimination); M_full and A_full keep
/// every Lagrange node and are what the stiffness row-sum and patch tests look at.
struct OperatorPair {
  FESpacePtr space;
  CoefficientPtr coefficient;
  SparseMatrix M;
  SparseMatrix A;
  SparseMatrix M_full;
  SparseMatrix A_full;
  int quadrature_order = 0;

  Vector solve_mass(const Vector& rhs) const;
  Vector solve_stiffness(const Vector& rhs) const;

  /// Interior-dof reduction of a full nodal load vector.
  Vector restrict(const Vector& full_load) const { return space->to_dofs(full_load); }

  /// Shared read-only factorizations, computed once by assemble().
  std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> mass_factor;
  std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> stiffness_factor;
};

using OperatorPairPtr = std::shared_ptr<const OperatorPair>;

/// Assembles M and A with the space's quadrature (or `quadrature_order` when > 0).
///
/// Throws EllipticityViolation if a leaves [1/Lambda, Lambda] at any quadrature point.
OperatorPairPtr assemble(FESpacePtr space, CoefficientPtr a, int quadrature_order = -1);

/// Relative change of A (Frobenius) when the quadrature order is doubled.
struct QuadraturePerturbation {
  int base_order;
  int doubled_order;
  double stiffness_change;
  double mass_change;
};

QuadraturePerturbation quadrature_perturbation(const FESpacePtr& space, const CoefficientPtr& a);

/// Full nodal load (f, phi_i) by element quadrature of the given order (-1: space default).
Vector load_vector(const FESpace& space, const ScalarFunction& f, int quadrature_order = -1);

/// Full nodal load (g, grad phi_i) for a vector field g.
Vector divergence_load(const FESpace& space, const GradientFunction& g, int quadrature_order = -1);

/// Coordinate text export, one "i j value" line per stored entry (0-based).
void write_triplets(std::ostream& os, const SparseMatrix& m);
void save_triplets(const std::string& path, const SparseMatrix& m);

/// Dof vector export, one "index value" line per entry.
void write_vector(std::ostream& os, const Vector& v);

/// Splits [0, n) into contiguous blocks handed to up to `threads` workers (0: hardware).
void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body,
                  unsigned threads = 0);

}  // namespace pfem
