#pragma once

#include "pfem/evolution.hpp"
#include "pfem/fespace.hpp"

#include <limits>
#include <vector>

namespace pfem {

enum class Derivative { none, gradient };

struct NormSpec {
  double p = 2.0;
  double q = 2.0;
  Derivative derivative = Derivative::none;
  double grading = 1.0;

  void validate() const;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cached samplers for repeated L^q / W^{1,q} norms of fields on one space.
///
/// Finite q: element quadrature of |u|^q (or |grad u|^q). q = inf: max over the
/// vertices (r = 1, exact) or a 15x15 barycentric lattice per element plus vertices.
class NormEvaluator {
 public:
  explicit NormEvaluator(const FESpace& space, int quadrature_order = -1);

  double operator()(const Vector& coeffs, double q, Derivative d = Derivative::none) const;
  /// Norms of every column (dof or full vectors).
  Vector columns(const Matrix& coeffs, double q, Derivative d = Derivative::none) const;

  const PointSampler& quadrature() const { return quad_; }

 private:
  Matrix full_columns(const Matrix& coeffs) const;

  const FESpace& space_;
  PointSampler quad_;
  PointSampler lattice_;
  SparseMatrix embed_;  // nodes x dofs injection
};

double space_norm(const FESpace& space, const Vector& coeffs, double q, Derivative d = Derivative::none);

/// Trapezoid-in-time L^p of already computed spatial norms (p = inf: max).
double bochner_from_values(const std::vector<double>& times, const Vector& values, double p);

double bochner_norm(const BochnerField& field, const FESpace& space, const NormSpec& spec);

/// max over samples and grid times of (||E(t)v||_inf + t ||d/dt E(t)v||_inf) / ||v||_inf.
double linf_stability_constant(const SpectralDecomposition& spec, const FESpace& space,
                               const std::vector<Vector>& samples, const std::vector<double>& grid);

}  // namespace pfem
