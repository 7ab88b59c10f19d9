#include "pfem/norms.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

void NormSpec::validate() const {
  if (!(p > 1.0) || !(q > 1.0)) throw InvalidInput("norm exponents must lie in (1, inf]");
  if (!(grading >= 1.0)) throw InvalidInput("grading exponent must be >= 1");
}

namespace {

std::vector<std::array<double, 3>> lattice_points(int degree) {
  std::vector<std::array<double, 3>> pts;
  const int n = degree == 1 ? 1 : 15;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) {
      const double a = double(i) / n, b = double(j) / n;
      pts.push_back({1.0 - a - b, a, b});
    }
  return pts;
}

}  // namespace

NormEvaluator::NormEvaluator(const FESpace& space, int quadrature_order)
    : space_(space),
      quad_(quadrature_sampler(space, quadrature_order)),
      lattice_(element_sampler(space, lattice_points(space.degree()))) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t d = 0; d < space.num_dofs(); ++d) trip.emplace_back(space.node_of_dof(d), static_cast<int>(d), 1.0);
  embed_.resize(static_cast<Eigen::Index>(space.num_nodes()), static_cast<Eigen::Index>(space.num_dofs()));
  embed_.setFromTriplets(trip.begin(), trip.end());
}

Matrix NormEvaluator::full_columns(const Matrix& coeffs) const {
  if (static_cast<std::size_t>(coeffs.rows()) == space_.num_nodes()) return coeffs;
  if (static_cast<std::size_t>(coeffs.rows()) != space_.num_dofs()) throw InvalidInput("norm: wrong vector length");
  return embed_ * coeffs;
}

Vector NormEvaluator::columns(const Matrix& coeffs, double q, Derivative d) const {
  if (!(q >= 1.0)) throw InvalidInput("space norm exponent must be >= 1");
  const Matrix U = full_columns(coeffs);
  const PointSampler& s = std::isinf(q) ? lattice_ : quad_;
  Matrix mag;
  if (d == Derivative::none) {
    mag = (s.value * U).cwiseAbs();
  } else {
    const Matrix gx = s.dx * U, gy = s.dy * U;
    mag = (gx.array().square() + gy.array().square()).sqrt().matrix();
  }
  Vector out(U.cols());
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    if (std::isinf(q)) {
      out[c] = mag.rows() ? mag.col(c).maxCoeff() : 0.0;
    } else {
      double sum = 0.0;
      for (Eigen::Index r = 0; r < mag.rows(); ++r) sum += s.weights[static_cast<std::size_t>(r)] * std::pow(mag(r, c), q);
      out[c] = std::pow(sum, 1.0 / q);
    }
  }
  return out;
}

double NormEvaluator::operator()(const Vector& coeffs, double q, Derivative d) const {
  return columns(Matrix(coeffs), q, d)[0];
}

double space_norm(const FESpace& space, const Vector& coeffs, double q, Derivative d) {
  return NormEvaluator(space)(coeffs, q, d);
}

double bochner_from_values(const std::vector<double>& times, const Vector& values, double p) {
  if (times.size() != static_cast<std::size_t>(values.size())) throw InvalidInput("bochner: grid and values differ in length");
  if (std::isinf(p)) return values.size() ? values.maxCoeff() : 0.0;
  if (times.size() < 2) throw InvalidInput("bochner: p < inf needs at least two snapshots");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double dt = times[i + 1] - times[i];
    sum += 0.5 * dt * (std::pow(values[static_cast<Eigen::Index>(i)], p) + std::pow(values[static_cast<Eigen::Index>(i + 1)], p));
  }
  return std::pow(sum, 1.0 / p);
}

double bochner_norm(const BochnerField& field, const FESpace& space, const NormSpec& spec) {
  spec.validate();
  field.validate();
  if (field.snapshots.empty()) throw InvalidInput("bochner: empty field");
  Matrix U(field.snapshots.front().size(), static_cast<Eigen::Index>(field.snapshots.size()));
  for (std::size_t i = 0; i < field.snapshots.size(); ++i) U.col(static_cast<Eigen::Index>(i)) = field.snapshots[i];
  const Vector vals = NormEvaluator(space).columns(U, spec.q, spec.derivative);
  return bochner_from_values(field.times, vals, spec.p);
}

double linf_stability_constant(const SpectralDecomposition& spec, const FESpace& space,
                               const std::vector<Vector>& samples, const std::vector<double>& grid) {
  if (samples.empty()) throw InvalidInput("linf_stability_constant: no samples");
  const NormEvaluator norms(space);
  const auto nt = static_cast<Eigen::Index>(grid.size());
  double best = 0.0;
  for (const Vector& v : samples) {
    const double vn = norms(v, kInf);
    if (!(vn > 0.0)) throw InvalidInput("linf_stability_constant: zero sample vector");
    const Vector c = spec.modal(v);
    Matrix C0(c.size(), nt), C1(c.size(), nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      const double t = grid[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        const double lam = spec.eigenvalues[k];
        const double e = std::exp(-lam * t) * c[k];
        C0(k, i) = e;
        C1(k, i) = -t * lam * e;
      }
    }
    Matrix U0 = spec.eigenvectors * C0;
    // E(0) v = v exactly; the synthesized column differs from v only by rounding.
    for (Eigen::Index i = 0; i < nt; ++i)
      if (grid[static_cast<std::size_t>(i)] == 0.0) U0.col(i) = v;
    const Vector n0 = norms.columns(U0, kInf);
    const Vector n1 = norms.columns(spec.eigenvectors * C1, kInf);
    best = std::max(best, ((n0 + n1) / vn).maxCoeff());
  }
  return best;
}

}  // namespace pfem
