#pragma once

#include "pfem/assembly.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pfem {

/// Generalized eigensystem A v = lambda M v with M-orthonormal eigenvectors (columns).
struct SpectralDecomposition {
  FESpacePtr space;
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // ndofs x ndofs
  /// M v_k, kept so that modal coordinates are a single product: c = (M V)^T u = V^T M u.
  Matrix mass_times_vectors;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  /// Modal coefficients v_k^T M u.
  Vector modal(const Vector& u) const { return mass_times_vectors.transpose() * u; }
  Vector synthesize(const Vector& coeffs) const { return eigenvectors * coeffs; }
};

inline constexpr std::size_t kDenseCap = 6000;

/// Dense LAPACK dsygvd solve. Throws CapExceeded above `cap` interior dofs.
SpectralDecomposition spectral_decompose(const OperatorPair& pair, std::size_t cap = kDenseCap);

/// (-A_h)^l E_h(t) v, i.e. sum_k (-lambda_k)^l e^{-lambda_k t} (v^T M v_k) v_k.
Vector semigroup_apply(const SpectralDecomposition& spec, double t, const Vector& v, int derivative_order = 0);

/// Time-indexed dof snapshots.
struct BochnerField {
  std::vector<double> times;
  std::vector<Vector> snapshots;
  double grading = 1.0;

  void validate() const;
};

/// t_i = T (i/n)^gamma, i = 0..n.
std::vector<double> graded_grid(double T, std::size_t n, double gamma);

/// Load in dof space (already paired with test functions), sampled at a time.
using TimeLoad = std::function<Vector(double)>;

/// Modal coefficients of u_h on the grid (columns), u_h(0) = 0, load piecewise linear in t.
Matrix duhamel_modal(const SpectralDecomposition& spec, const TimeLoad& f, const std::vector<double>& grid);
/// Same, with the load given as modal coefficients per grid point (columns).
Matrix duhamel_modal_from_coefficients(const Vector& eigenvalues, const Matrix& load_modal,
                                       const std::vector<double>& grid);

BochnerField duhamel_solve(const SpectralDecomposition& spec, const TimeLoad& f, const std::vector<double>& grid);

struct ThetaResult {
  BochnerField field;
  /// max_n ||u_dt(t_n) - u_{dt/2}(t_n)||_M / (2^order - 1)
  double richardson_indicator = 0.0;
};

/// Theta scheme on the uniform grid 0, dt, ..., T from u0 (interior dofs).
ThetaResult theta_step_solve(const OperatorPair& pair, const TimeLoad& f, double T, double dt, double theta,
                             const Vector& u0);

/// One block per snapshot: a "t= <time>" line followed by "index value" lines.
void write_bochner(std::ostream& os, const BochnerField& field);
/// JSON index {"grading", "count", "times"}.
void write_bochner_index(std::ostream& os, const BochnerField& field);
/// Writes `path` and `path`.json.
void save_bochner(const std::string& path, const BochnerField& field);

/// phi1(z) = (1 - e^{-z})/z, phi2(z) = (z - 1 + e^{-z})/z^2, stable for small z.
double phi1(double z);
double phi2(double z);

}  // namespace pfem
