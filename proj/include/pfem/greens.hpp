#pragma once

#include "pfem/evolution.hpp"
#include "pfem/projections.hpp"

#include <memory>
#include <vector>

namespace pfem {

using SpectralPtr = std::shared_ptr<const SpectralDecomposition>;

/// Green's function snapshots E_h(t) g0 kept in modal form; snapshots are synthesized on demand.
struct GreenField {
  Vec2 x0;
  FESpacePtr space;
  SpectralPtr spec;
  Vector initial;  // interior dofs at t = 0
  Vector modal;    // v_k^T M initial
  std::vector<double> times;

  /// d^l/dt^l of the field at the given times, one dof column per time.
  Matrix synthesize(const std::vector<double>& t, int derivative_order = 0) const;
  BochnerField field() const;
};

/// Gamma_h(t) = E_h(t) P_h delta~_{x0}.
GreenField discrete_green(const OperatorPair& pair, SpectralPtr spec, const Vec2& x0, const std::vector<double>& grid);

/// Fine-space surrogate of the continuous Gamma: initial data is the fine L^2 projection of
/// the regularized delta built on the coarse element containing x0.
///
/// The fine mesh must be the coarse mesh or a nested refinement of it.
GreenField reference_green(const OperatorPair& fine_pair, SpectralPtr fine_spec, const FESpace& coarse_space,
                           const Vec2& x0, const std::vector<double>& grid);

/// Eigen-expansion kernel sum_k e^{-lambda_k t} v_k(x) v_k(y).
double eigen_kernel(const SpectralDecomposition& spec, const Vec2& x, const Vec2& y, double t);

/// Parabolic dyadic shells around x0 with radii d_j = 2^{-j-3} R0 K0^{-2}.
struct DyadicDecomposition {
  Vec2 x0;
  double R0 = 1.0;
  double K0 = 1.0;
  double C_star = 10.0;
  double h = 0.0;
  double T = 1.0;
  int J_star = 0;
  /// h too large for the decomposition: a single shell Q_0 covers everything.
  bool trivial = true;

  double d(int j) const;
  /// 0..J_star for Q_j, J_star + 1 for the innermost set (max(|x-x0|, sqrt t) < d_{J*}).
  int shell(const Vec2& x, double t) const;
  /// Shell index for rho = max(|x-x0|, sqrt t).
  int shell_of(double rho) const;
  /// Same with t = 0: Omega_j and Omega_*.
  int spatial_shell(const Vec2& x) const { return shell(x, 0.0); }
  int innermost() const { return J_star + 1; }
  /// Shell indices of Q_j''' (j-3..j+3 clipped, innermost included when j+3 > J_star).
  std::vector<int> widened(int j) const;
};

DyadicDecomposition dyadic_decomposition(const DomainMetrics& metrics, const Vec2& x0, double h, double C_star,
                                         double T);

/// Point counts per shell (index J_star + 1 is the innermost set) over points x times.
std::vector<std::size_t> shell_counts(const DyadicDecomposition& dec, const std::vector<Vec2>& points,
                                      const std::vector<double>& times);

struct GreenFunctionals {
  double I1 = 0.0;
  double I2 = 0.0;
};

struct KappaReport {
  std::vector<double> d;
  std::vector<double> grad_norm;  // ||grad F||_{L^2(Q_j)}
  std::vector<double> dt_norm;    // ||F_t||_{L^2(Q_j)}
  std::vector<double> dtt_norm;   // ||F_tt||_{L^2(Q_j)}
  std::vector<double> contributions;
  double total = 0.0;
};

struct LocalEnergyTerms {
  int j = 0;
  double lhs = 0.0;
  double I = 0.0;
  double X = 0.0;
  double H = 0.0;
  double tail = 0.0;  // d_j^{-2} ||e||_{L^2(Q_j''')}
  double rhs = 0.0;
  double ratio = 0.0;
};

struct GreenDiagnostics {
  GreenFunctionals functionals;
  KappaReport kappa;
  std::vector<LocalEnergyTerms> local;  // j = 1..J_star
  std::vector<std::size_t> shell_points;
  std::size_t total_points = 0;
};

struct DiagnosticsOptions {
  std::size_t chunk = 16;
  /// Exponent m of the H_j term.
  double m = 5.0;
  bool local_energy = true;
};

/// One pass over the shared time grid computing I1, I2, the shell-weighted K functional and
/// the local energy terms of F = coarse - fine at the fine quadrature points.
GreenDiagnostics green_diagnostics(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec,
                                   const DiagnosticsOptions& options = {});

GreenFunctionals green_error_functional(const GreenField& coarse, const GreenField& fine);
KappaReport kappa_functional(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec);
/// Rejects j outside 1..J_star.
LocalEnergyTerms local_energy_ratio(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec,
                                    int j);

/// Smallest C with C (sqrt t + rho)^{-2} exp(-rho^2 / (C t)) >= |Gamma(t, x)| at every sampled node.
struct GaussianFit {
  double C = 0.0;
  /// RMS of log10(bound / |Gamma|) at the sampled points.
  double residual = 0.0;
  std::size_t samples = 0;
};

/// Samples nodes and times with t >= h^2, max(sqrt t, rho) >= 2h and |Gamma| above 1e-10 of the
/// snapshot maximum; every `time_stride`-th grid time is used.
GaussianFit gaussian_tail_fit(const GreenField& g, double h, std::size_t time_stride = 4);

/// max over the grid of ||Gamma(t)||_{L^1} + t ||d/dt Gamma(t)||_{L^1}.
double l1_bound(const GreenField& g);

}  // namespace pfem
