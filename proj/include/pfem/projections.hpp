#pragma once

#include "pfem/assembly.hpp"

#include <array>
#include <vector>

namespace pfem {

/// P_h f: solves M c = (f, phi_i). Returns interior dofs.
Vector l2_project(const OperatorPair& pair, const ScalarFunction& f, int quadrature_order = -1);

/// R_h f: solves A c = (a grad f, grad phi_i). f must vanish on the boundary nodes (tol 1e-10).
Vector ritz_project(const OperatorPair& pair, const ScalarFunction& f, const GradientFunction& grad_f,
                    int quadrature_order = -1);

/// Pi_h f on interior nodes (boundary values dropped).
Vector lagrange_interpolate(const FESpace& space, const ScalarFunction& f);
/// Pi_h f at every Lagrange node.
Vector lagrange_interpolate_full(const FESpace& space, const ScalarFunction& f);

/// Patch-average quasi-interpolant: node value = mean of f over the elements sharing
/// the node, boundary nodes set to 0.
Vector clement_interpolate(const FESpace& space, const ScalarFunction& f, int quadrature_order = -1);

/// Largest distance from a Lagrange node to its patch, in units of h.
double patch_constant(const FESpace& space);

/// q(x) b(x) on the element containing x0, with b = (l1 l2 l3)^bump_power.
struct RegularizedDelta {
  Vec2 x0;
  int element = -1;
  int degree = 1;
  int bump_power = 4;
  std::array<Vec2, 3> vertices;
  /// q in the local Lagrange basis of the element.
  std::vector<double> poly_coeffs;

  double operator()(const Vec2& x) const;
  double at_barycentric(const std::array<double, 3>& lam) const;
  /// ||delta||_{L^p} by high-order quadrature on the element (p = inf samples a lattice).
  double lp_norm(double p) const;
};

RegularizedDelta regularized_delta(const FESpace& space, const Vec2& x0);

/// (delta, phi_i) = phi_i(x0) for every node i.
Vector delta_load(const FESpace& space, const Vec2& x0);

struct DecayFit {
  double amplitude = 0.0;
  /// Decay per unit of distance / h.
  double rate = 0.0;
  /// RMS residual of the log-linear regression.
  double residual = 0.0;
  int bins = 0;
};

/// Fits max |v| over unit-width distance bins (distance / h up to max_distance) to A exp(-rate s).
DecayFit fit_decay(const FESpace& space, const Vector& values, const Vec2& x0, double max_distance = 8.0);

struct DiscreteDelta {
  Vector coeffs;  // interior dofs
  DecayFit fit;
};

DiscreteDelta discrete_delta(const OperatorPair& pair, const Vec2& x0);

/// Polynomial smoothstep, C^n at both ends: S(0) = 0, S(1) = 1, S'..S^(n) vanish there.
class Smoothstep {
 public:
  explicit Smoothstep(int n);
  double operator()(double s) const;
  double derivative(double s) const;
  /// max |S'| on [0,1].
  double max_slope() const;

 private:
  std::vector<double> coeffs_;  // monomial coefficients
};

struct Disk {
  Vec2 center;
  double radius;
};

struct SuperapproxReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double ritz_term = 0.0;  // d^2 ||R_h(omega psi) - chi||_{H^1}
  double l2_term = 0.0;    // d ||omega psi - chi||_{L^2}
  double kappa = 0.0;
  double d = 0.0;
  double h = 0.0;
  /// max |grad omega| * d for the cut-off in use.
  double cutoff_constant = 0.0;
};

/// Superapproximation ratio for psi_h (interior dofs). Rejects d < 10 kappa h.
///
/// omega is 1 on |x - c| <= R - d and 0 outside D; the second cut-off equals 1 up to
/// R + 0.7 d and vanishes beyond R + 0.8 d; chi_h = Pi_h(omega~ R_h(omega psi_h)).
SuperapproxReport superapprox_check(const OperatorPair& pair, const Disk& D, double d, const Vector& psi_h);

}  // namespace pfem
