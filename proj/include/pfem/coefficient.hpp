#pragma once

#include "pfem/common.hpp"
#include "pfem/geometry.hpp"

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace pfem {

class FESpace;

/// Symmetric matrix-valued diffusion coefficient with its ellipticity certificate.
struct CoefficientField {
  std::string name;
  /// constant | lipschitz | w1p_rough
  std::string regularity_tag;
  std::map<std::string, double> params;
  std::function<Mat2(const Vec2&)> eval;
  /// Partial derivatives (d/dx a, d/dy a); may be empty for samples without a closed form.
  std::function<std::array<Mat2, 2>(const Vec2&)> gradient;
  /// Declared ellipticity constant: Lambda^{-1} |xi|^2 <= xi^T a xi <= Lambda |xi|^2.
  double lambda = 1.0;
  /// Certified Sobolev margin: a in W^{1,2+alpha}. +inf for smooth samples.
  double alpha = std::numeric_limits<double>::infinity();
  /// Exclusive upper bound of admissible alpha (inf for smooth samples).
  double alpha_sup = std::numeric_limits<double>::infinity();
};

using CoefficientPtr = std::shared_ptr<const CoefficientField>;

struct CoefficientReport {
  double min_eigenvalue;
  double max_eigenvalue;
  double lambda;
  bool pass;
  /// Quadrature point with the worst violation (or the extreme eigenvalue when passing).
  Vec2 worst_point;
  std::size_t points_checked;
};

/// Rayleigh bounds of a over every quadrature point of the space.
CoefficientReport validate_coefficient(const CoefficientField& a, const FESpace& space);

/// Raised by assembly when the coefficient violates its declared ellipticity.
class EllipticityViolation : public InvalidInput {
 public:
  EllipticityViolation(const std::string& what, Vec2 point) : InvalidInput(what), point_(point) {}
  const Vec2& point() const { return point_; }

 private:
  Vec2 point_;
};

// ---------------------------------------------------------------- catalogue

struct CatalogueEntry {
  std::string name;
  std::string regularity_tag;
  std::string description;
  std::map<std::string, double> defaults;
};

/// Names and default parameters of every shipped sample.
std::vector<CatalogueEntry> catalogue();

/// Build a certified sample on `domain`.
///
/// identity, constant (c), smooth_anisotropic, rough_isotropic (beta, zx, zy),
/// rough_anisotropic (beta, zx, zy, ratio). The rough families require beta in (0,1).
CoefficientPtr make_sample(const std::string& name, const std::map<std::string, double>& params,
                           const Polygon& domain);

}  // namespace pfem
