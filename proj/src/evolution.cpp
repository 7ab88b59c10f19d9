#include "pfem/evolution.hpp"

#include <lapacke.h>
#include "json.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <fstream>
#include <ostream>

namespace pfem {

double phi1(double z) {
  if (std::abs(z) < 0.5) {
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < 18; ++k) {
      sum += term;
      term *= -z / (k + 2);
    }
    return sum;
  }
  return -std::expm1(-z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 0.5) {
    // sum_k (-z)^k / (k+2)!
    double term = 0.5, sum = 0.0;
    for (int k = 0; k < 18; ++k) {
      sum += term;
      term *= -z / (k + 3);
    }
    return sum;
  }
  return (z + std::expm1(-z)) / (z * z);
}

SpectralDecomposition spectral_decompose(const OperatorPair& pair, std::size_t cap) {
  const auto n = static_cast<std::size_t>(pair.A.rows());
  if (n > cap) {
    throw CapExceeded("dense eigensolve refused: " + std::to_string(n) + " interior dofs exceed the cap of " +
                          std::to_string(cap) + "; use theta_step_solve instead",
                      n, cap);
  }
  if (n == 0) throw InvalidInput("spectral_decompose: space has no interior dofs");
  Matrix A = Matrix(pair.A);
  Matrix B = Matrix(pair.M);
  Vector w(static_cast<Eigen::Index>(n));
  const auto ln = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_dsygvd(LAPACK_COL_MAJOR, 1, 'V', 'U', ln, A.data(), ln, B.data(), ln, w.data());
  if (info != 0) throw InternalError("dsygvd failed with info = " + std::to_string(info));
  SpectralDecomposition spec;
  spec.space = pair.space;
  spec.eigenvalues = std::move(w);
  spec.eigenvectors = std::move(A);
  // Fix the sign of each eigenvector (largest-magnitude entry positive) so output is reproducible.
  for (Eigen::Index k = 0; k < spec.eigenvectors.cols(); ++k) {
    Eigen::Index imax = 0;
    spec.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (spec.eigenvectors(imax, k) < 0) spec.eigenvectors.col(k) *= -1.0;
  }
  spec.mass_times_vectors = pair.M * spec.eigenvectors;
  if (!(spec.eigenvalues[0] > 0.0)) throw InternalError("first eigenvalue is not positive");
  return spec;
}

Vector semigroup_apply(const SpectralDecomposition& spec, double t, const Vector& v, int derivative_order) {
  if (t < 0.0) throw InvalidInput("semigroup_apply: negative time");
  if (derivative_order < 0 || derivative_order > 2) throw InvalidInput("semigroup_apply: derivative order must be 0, 1 or 2");
  if (t == 0.0 && derivative_order == 0) return v;
  Vector c = spec.modal(v);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double lam = spec.eigenvalues[k];
    c[k] *= std::pow(-lam, derivative_order) * std::exp(-lam * t);
  }
  return spec.synthesize(c);
}

void BochnerField::validate() const {
  if (times.size() != snapshots.size()) throw InvalidInput("BochnerField: snapshot count differs from grid length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidInput("BochnerField: time grid not strictly increasing");
}

std::vector<double> graded_grid(double T, std::size_t n, double gamma) {
  if (!(T > 0.0) || n == 0 || !(gamma >= 1.0)) throw InvalidInput("graded_grid: need T > 0, n >= 1, gamma >= 1");
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = T * std::pow(static_cast<double>(i) / static_cast<double>(n), gamma);
  g[n] = T;
  return g;
}

Matrix duhamel_modal_from_coefficients(const Vector& eigenvalues, const Matrix& load_modal,
                                       const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInput("duhamel: empty time grid");
  const Eigen::Index nm = eigenvalues.size();
  const auto nt = static_cast<Eigen::Index>(grid.size());
  Matrix u = Matrix::Zero(nm, nt);
  for (Eigen::Index i = 0; i + 1 < nt; ++i) {
    const double dt = grid[static_cast<std::size_t>(i + 1)] - grid[static_cast<std::size_t>(i)];
    if (!(dt > 0.0)) throw InvalidInput("duhamel: time grid not strictly increasing");
    for (Eigen::Index k = 0; k < nm; ++k) {
      const double z = eigenvalues[k] * dt;
      const double a = load_modal(k, i);
      const double b = (load_modal(k, i + 1) - a) / dt;
      u(k, i + 1) = std::exp(-z) * u(k, i) + dt * (a * phi1(z) + b * dt * phi2(z));
    }
  }
  return u;
}

Matrix duhamel_modal(const SpectralDecomposition& spec, const TimeLoad& f, const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInput("duhamel: empty time grid");
  Matrix F(static_cast<Eigen::Index>(spec.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) F.col(static_cast<Eigen::Index>(i)) = f(grid[i]);
  const Matrix Fm = spec.eigenvectors.transpose() * F;
  return duhamel_modal_from_coefficients(spec.eigenvalues, Fm, grid);
}

BochnerField duhamel_solve(const SpectralDecomposition& spec, const TimeLoad& f, const std::vector<double>& grid) {
  const Matrix u = duhamel_modal(spec, f, grid);
  const Matrix U = spec.eigenvectors * u;
  BochnerField field;
  field.times = grid;
  for (Eigen::Index i = 0; i < U.cols(); ++i) field.snapshots.emplace_back(U.col(i));
  field.validate();
  return field;
}

namespace {

std::vector<Vector> theta_run(const OperatorPair& pair, const TimeLoad& f, std::size_t steps, double dt, double theta,
                              const Vector& u0) {
  const SparseMatrix L = pair.M + theta * dt * pair.A;
  const SparseMatrix R = pair.M - (1.0 - theta) * dt * pair.A;
  Eigen::SimplicialLDLT<SparseMatrix> solver(L);
  if (solver.info() != Eigen::Success) throw InternalError("theta step matrix factorization failed");
  std::vector<Vector> out;
  out.reserve(steps + 1);
  out.push_back(u0);
  Vector fprev = f(0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const Vector fnext = f(static_cast<double>(n + 1) * dt);
    const Vector rhs = R * out.back() + dt * (theta * fnext + (1.0 - theta) * fprev);
    out.push_back(solver.solve(rhs));
    if (solver.info() != Eigen::Success) throw InternalError("theta step solve failed");
    fprev = fnext;
  }
  return out;
}

}  // namespace

ThetaResult theta_step_solve(const OperatorPair& pair, const TimeLoad& f, double T, double dt, double theta,
                             const Vector& u0) {
  if (!(dt > 0.0) || !(T > 0.0)) throw InvalidInput("theta_step_solve: dt and T must be positive");
  if (!(theta >= 0.5 && theta <= 1.0)) throw InvalidInput("theta_step_solve: theta must lie in [1/2, 1]");
  const double ratio = T / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
    throw InvalidInput("theta_step_solve: T must be an integer multiple of dt");
  }
  const Vector start = u0.size() == 0 ? Vector::Zero(pair.A.rows()) : u0;
  const auto coarse = theta_run(pair, f, steps, dt, theta, start);
  const auto fine = theta_run(pair, f, 2 * steps, dt / 2.0, theta, start);
  const int order = theta == 0.5 ? 2 : 1;
  ThetaResult res;
  res.field.grading = 1.0;
  for (std::size_t n = 0; n <= steps; ++n) {
    res.field.times.push_back(static_cast<double>(n) * dt);
    res.field.snapshots.push_back(coarse[n]);
    const Vector d = coarse[n] - fine[2 * n];
    res.richardson_indicator =
        std::max(res.richardson_indicator, std::sqrt(std::max(0.0, d.dot(pair.M * d))) / (std::pow(2.0, order) - 1.0));
  }
  res.field.times.back() = T;
  return res;
}

void write_bochner(std::ostream& os, const BochnerField& field) {
  field.validate();
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < field.times.size(); ++i) {
    os << "t= " << field.times[i] << '\n';
    const Vector& s = field.snapshots[i];
    for (Eigen::Index k = 0; k < s.size(); ++k) os << k << ' ' << s[k] << '\n';
  }
  os.precision(old);
}

void write_bochner_index(std::ostream& os, const BochnerField& field) {
  nlohmann::ordered_json j;
  j["grading"] = field.grading;
  j["count"] = field.times.size();
  j["times"] = field.times;
  os << j.dump(2) << '\n';
}

void save_bochner(const std::string& path, const BochnerField& field) {
  std::ofstream data(path);
  if (!data) throw InvalidInput("cannot open " + path + " for writing");
  write_bochner(data, field);
  std::ofstream index(path + ".json");
  write_bochner_index(index, field);
}

}  // namespace pfem
