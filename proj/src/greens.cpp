#include "pfem/greens.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

namespace {

SparseMatrix dof_embedding(const FESpace& space) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(space.num_dofs());
  for (std::size_t d = 0; d < space.num_dofs(); ++d) trip.emplace_back(space.node_of_dof(d), static_cast<int>(d), 1.0);
  SparseMatrix E(static_cast<Eigen::Index>(space.num_nodes()), static_cast<Eigen::Index>(space.num_dofs()));
  E.setFromTriplets(trip.begin(), trip.end());
  return E;
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    w[i] += 0.5 * dt;
    w[i + 1] += 0.5 * dt;
  }
  return w;
}

GreenField make_field(const Vec2& x0, FESpacePtr space, SpectralPtr spec, Vector initial,
                      const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInput("green field: empty time grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InvalidInput("green field: time grid not strictly increasing");
  GreenField g;
  g.x0 = x0;
  g.space = std::move(space);
  g.modal = spec->modal(initial);
  g.spec = std::move(spec);
  g.initial = std::move(initial);
  g.times = grid;
  return g;
}

}  // namespace

Matrix GreenField::synthesize(const std::vector<double>& t, int derivative_order) const {
  const Eigen::Index n = modal.size();
  Matrix C(n, static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double lam = spec->eigenvalues[k];
      C(k, static_cast<Eigen::Index>(i)) = modal[k] * std::pow(-lam, derivative_order) * std::exp(-lam * t[i]);
    }
  return spec->eigenvectors * C;
}

BochnerField GreenField::field() const {
  const Matrix U = synthesize(times, 0);
  BochnerField f;
  f.times = times;
  for (Eigen::Index i = 0; i < U.cols(); ++i) f.snapshots.emplace_back(U.col(i));
  if (!times.empty() && times.front() == 0.0) f.snapshots.front() = initial;
  return f;
}

GreenField discrete_green(const OperatorPair& pair, SpectralPtr spec, const Vec2& x0, const std::vector<double>& grid) {
  Vector init = discrete_delta(pair, x0).coeffs;
  return make_field(x0, pair.space, std::move(spec), std::move(init), grid);
}

GreenField reference_green(const OperatorPair& fine_pair, SpectralPtr fine_spec, const FESpace& coarse_space,
                           const Vec2& x0, const std::vector<double>& grid) {
  const FESpace& fs = *fine_pair.space;
  const Mesh& fm = fs.mesh();
  const Mesh& cm = coarse_space.mesh();
  if (!fm.generations_below(cm)) throw InvalidInput("reference_green: fine mesh is not a nested refinement of the coarse mesh");
  const RegularizedDelta delta = regularized_delta(coarse_space, x0);
  const TriangleQuadrature quad(coarse_space.degree() + fs.degree() + 3 * delta.bump_power);
  std::vector<double> phi(fs.local_size());
  Vector load = Vector::Zero(static_cast<Eigen::Index>(fs.num_nodes()));
  for (std::size_t t = 0; t < fm.num_triangles(); ++t) {
    if (fm.ancestor_triangle(t, cm) != delta.element) continue;
    const double area = fm.area(t);
    const auto nodes = fs.element_nodes(t);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const double v = delta(fs.map_to_physical(t, quad.points()[q])) * area * quad.weights()[q];
      fs.basis().eval(quad.points()[q], phi);
      for (int k = 0; k < fs.local_size(); ++k) load[nodes[k]] += v * phi[k];
    }
  }
  Vector init = fine_pair.solve_mass(fine_pair.restrict(load));
  return make_field(x0, fine_pair.space, std::move(fine_spec), std::move(init), grid);
}

double eigen_kernel(const SpectralDecomposition& spec, const Vec2& x, const Vec2& y, double t) {
  const FESpace& space = *spec.space;
  const std::vector<Vec2> pts{x, y};
  const PointSampler s = point_sampler(space, pts);
  const Matrix vals = (s.value * dof_embedding(space)) * spec.eigenvectors;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < vals.cols(); ++k) sum += std::exp(-spec.eigenvalues[k] * t) * vals(0, k) * vals(1, k);
  return sum;
}

// ---------------------------------------------------------------- dyadic decomposition

double DyadicDecomposition::d(int j) const { return std::ldexp(R0 / (K0 * K0), -j - 3); }

int DyadicDecomposition::shell(const Vec2& x, double t) const {
  return shell_of(std::max((x - x0).norm(), std::sqrt(std::max(t, 0.0))));
}

int DyadicDecomposition::shell_of(double rho) const {
  if (trivial) return 0;
  if (rho >= 2.0 * d(1)) return 0;
  for (int j = 1; j <= J_star; ++j)
    if (rho >= d(j)) return j;
  return J_star + 1;
}

std::vector<int> DyadicDecomposition::widened(int j) const {
  std::vector<int> out;
  for (int k = j - 3; k <= j + 3; ++k)
    if (k >= 0 && k <= J_star) out.push_back(k);
  if (!trivial && j + 3 > J_star) out.push_back(innermost());
  return out;
}

DyadicDecomposition dyadic_decomposition(const DomainMetrics& metrics, const Vec2& x0, double h, double C_star,
                                         double T) {
  if (!(h > 0.0) || !(C_star > 0.0) || !(T > 0.0)) throw InvalidInput("dyadic_decomposition: h, C_star, T must be positive");
  DyadicDecomposition dec;
  dec.x0 = x0;
  dec.R0 = metrics.R0;
  dec.K0 = metrics.K0;
  dec.C_star = C_star;
  dec.h = h;
  dec.T = T;
  const double base = metrics.R0 / (metrics.K0 * metrics.K0);
  if (h < base / (16.0 * C_star)) {
    dec.trivial = false;
    dec.J_star = static_cast<int>(std::floor(std::log2(base / (8.0 * C_star * h))));
  }
  return dec;
}

std::vector<std::size_t> shell_counts(const DyadicDecomposition& dec, const std::vector<Vec2>& points,
                                      const std::vector<double>& times) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(dec.J_star + 2), 0);
  for (double t : times)
    for (const Vec2& x : points) ++counts[static_cast<std::size_t>(dec.shell(x, t))];
  return counts;
}

// ---------------------------------------------------------------- functionals

GreenDiagnostics green_diagnostics(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec,
                                   const DiagnosticsOptions& options) {
  if (coarse.times != fine.times) throw InvalidInput("green diagnostics: coarse and fine time grids differ");
  const FESpace& cs = *coarse.space;
  const FESpace& fs = *fine.space;
  if (!fs.mesh().generations_below(cs.mesh())) throw InvalidInput("green diagnostics: spaces are not nested");

  const PointSampler fq = quadrature_sampler(fs);
  const PointSampler cq = cross_sampler(cs, fq);
  const SparseMatrix Ef = dof_embedding(fs), Ec = dof_embedding(cs);
  const SparseMatrix Sf = fq.value * Ef, Sfx = fq.dx * Ef, Sfy = fq.dy * Ef;
  const SparseMatrix Sc = cq.value * Ec, Scx = cq.dx * Ec, Scy = cq.dy * Ec;

  // Pi_h of a fine field: its values at the coarse interior nodes, read back through the coarse basis.
  SparseMatrix Px, Pxx, Pxy;
  if (options.local_energy) {
    std::vector<Vec2> cnodes;
    for (std::size_t d = 0; d < cs.num_dofs(); ++d) cnodes.push_back(cs.node_point(static_cast<std::size_t>(cs.node_of_dof(d))));
    const SparseMatrix Pi = SparseMatrix(point_sampler(fs, cnodes).value) * Ef;
    Px = SparseMatrix(Sc * Pi) - Sf;
    Pxx = SparseMatrix(Scx * Pi) - Sfx;
    Pxy = SparseMatrix(Scy * Pi) - Sfy;
  }

  const std::size_t nq = fq.points.size();
  const int nshell = dec.J_star + 2;
  enum { kGradF, kFt, kFtt, kF, kX, kXg, kXt, kXtg, kCount };
  std::vector<std::array<double, kCount>> acc(static_cast<std::size_t>(nshell));
  for (auto& a : acc) a.fill(0.0);

  GreenDiagnostics out;
  out.shell_points.assign(static_cast<std::size_t>(nshell), 0);
  const std::vector<double>& times = coarse.times;
  const std::vector<double> wt = trapezoid_weights(times);
  std::vector<double> r(nq);
  for (std::size_t q = 0; q < nq; ++q) r[q] = (fq.points[q] - dec.x0).norm();

  for (std::size_t begin = 0; begin < times.size(); begin += options.chunk) {
    const std::size_t end = std::min(times.size(), begin + options.chunk);
    const std::vector<double> tc(times.begin() + static_cast<long>(begin), times.begin() + static_cast<long>(end));
    const Matrix Uc0 = coarse.synthesize(tc, 0), Uc1 = coarse.synthesize(tc, 1), Uc2 = coarse.synthesize(tc, 2);
    const Matrix Uf0 = fine.synthesize(tc, 0), Uf1 = fine.synthesize(tc, 1), Uf2 = fine.synthesize(tc, 2);
    const Matrix F0 = Sc * Uc0 - Sf * Uf0;
    const Matrix Fx = Scx * Uc0 - Sfx * Uf0;
    const Matrix Fy = Scy * Uc0 - Sfy * Uf0;
    const Matrix F1 = Sc * Uc1 - Sf * Uf1;
    const Matrix F2 = Sc * Uc2 - Sf * Uf2;
    Matrix X0, X0x, X0y, X1, X1x, X1y;
    if (options.local_energy) {
      X0 = Px * Uf0;
      X0x = Pxx * Uf0;
      X0y = Pxy * Uf0;
      X1 = Px * Uf1;
      X1x = Pxx * Uf1;
      X1y = Pxy * Uf1;
    }
    for (std::size_t i = begin; i < end; ++i) {
      const auto c = static_cast<Eigen::Index>(i - begin);
      const double t = times[i];
      const double st = std::sqrt(t);
      double i1 = 0.0, i2 = 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        const auto row = static_cast<Eigen::Index>(q);
        const double w = fq.weights[q];
        const int s = dec.shell_of(std::max(r[q], st));
        ++out.shell_points[static_cast<std::size_t>(s)];
        auto& a = acc[static_cast<std::size_t>(s)];
        const double ww = w * wt[i];
        const double ft = F1(row, c), ftt = F2(row, c);
        i1 += w * std::abs(ft);
        i2 += w * t * std::abs(ftt);
        a[kGradF] += ww * (Fx(row, c) * Fx(row, c) + Fy(row, c) * Fy(row, c));
        a[kFt] += ww * ft * ft;
        a[kFtt] += ww * ftt * ftt;
        a[kF] += ww * F0(row, c) * F0(row, c);
        if (options.local_energy) {
          a[kX] += ww * X0(row, c) * X0(row, c);
          a[kXg] += ww * (X0x(row, c) * X0x(row, c) + X0y(row, c) * X0y(row, c));
          a[kXt] += ww * X1(row, c) * X1(row, c);
          a[kXtg] += ww * (X1x(row, c) * X1x(row, c) + X1y(row, c) * X1y(row, c));
        }
      }
      out.functionals.I1 += wt[i] * i1;
      out.functionals.I2 += wt[i] * i2;
    }
  }
  out.total_points = nq * times.size();

  KappaReport& K = out.kappa;
  for (int j = 0; j <= dec.J_star; ++j) {
    const auto& a = acc[static_cast<std::size_t>(j)];
    const double dj = dec.d(j);
    K.d.push_back(dj);
    K.grad_norm.push_back(std::sqrt(a[kGradF]));
    K.dt_norm.push_back(std::sqrt(a[kFt]));
    K.dtt_norm.push_back(std::sqrt(a[kFtt]));
    const double c = dj * dj * (K.grad_norm.back() / dj + K.dt_norm.back() + dj * dj * K.dtt_norm.back());
    K.contributions.push_back(c);
    K.total += c;
  }

  if (options.local_energy && !dec.trivial) {
    // Initial data on the spatial shells Omega_j.
    std::vector<std::array<double, 2>> init(static_cast<std::size_t>(nshell), {0.0, 0.0});
    const Vector g0 = Sc * coarse.initial, g0x = Scx * coarse.initial, g0y = Scy * coarse.initial;
    for (std::size_t q = 0; q < nq; ++q) {
      const auto row = static_cast<Eigen::Index>(q);
      auto& a = init[static_cast<std::size_t>(dec.spatial_shell(fq.points[q]))];
      a[0] += fq.weights[q] * g0[row] * g0[row];
      a[1] += fq.weights[q] * (g0x[row] * g0x[row] + g0y[row] * g0y[row]);
    }
    const double h = cs.mesh().h();
    for (int j = 1; j <= dec.J_star; ++j) {
      const double dj = dec.d(j);
      std::array<double, kCount> W{};
      double i0 = 0.0, i1 = 0.0;
      for (int k : dec.widened(j)) {
        for (int m = 0; m < kCount; ++m) W[m] += acc[static_cast<std::size_t>(k)][m];
        i0 += init[static_cast<std::size_t>(k)][0];
        i1 += init[static_cast<std::size_t>(k)][1];
      }
      const auto& a = acc[static_cast<std::size_t>(j)];
      LocalEnergyTerms e;
      e.j = j;
      e.lhs = std::sqrt(a[kFt]) + std::sqrt(a[kGradF]) / dj;
      e.I = std::sqrt(i0) / dj + std::sqrt(i0 + i1);
      e.X = dj * std::sqrt(W[kXtg]) + std::sqrt(W[kXt]) + std::sqrt(W[kXg]) / dj + std::sqrt(W[kX]) / (dj * dj);
      e.H = std::pow(h / dj, options.m) * (std::sqrt(W[kFt]) + std::sqrt(W[kGradF]) / dj);
      e.tail = std::sqrt(W[kF]) / (dj * dj);
      e.rhs = e.I + e.X + e.H + e.tail;
      e.ratio = e.rhs > 0.0 ? e.lhs / e.rhs : 0.0;
      out.local.push_back(e);
    }
  }
  return out;
}

GreenFunctionals green_error_functional(const GreenField& coarse, const GreenField& fine) {
  DyadicDecomposition trivial;
  trivial.x0 = coarse.x0;
  DiagnosticsOptions opt;
  opt.local_energy = false;
  return green_diagnostics(coarse, fine, trivial, opt).functionals;
}

KappaReport kappa_functional(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec) {
  DiagnosticsOptions opt;
  opt.local_energy = false;
  return green_diagnostics(coarse, fine, dec, opt).kappa;
}

LocalEnergyTerms local_energy_ratio(const GreenField& coarse, const GreenField& fine, const DyadicDecomposition& dec,
                                    int j) {
  if (j < 1 || j > dec.J_star) {
    throw InvalidInput("local_energy_ratio: j = " + std::to_string(j) + " outside 1.." + std::to_string(dec.J_star));
  }
  return green_diagnostics(coarse, fine, dec).local[static_cast<std::size_t>(j - 1)];
}

// ---------------------------------------------------------------- Gaussian tail and L^1

GaussianFit gaussian_tail_fit(const GreenField& g, double h, std::size_t time_stride) {
  const FESpace& space = *g.space;
  std::vector<double> ts;
  for (std::size_t i = 0; i < g.times.size(); i += std::max<std::size_t>(time_stride, 1))
    if (g.times[i] >= h * h) ts.push_back(g.times[i]);
  if (ts.empty()) return {};
  const Matrix U = g.synthesize(ts, 0);
  std::vector<double> rho(space.num_dofs());
  for (std::size_t d = 0; d < space.num_dofs(); ++d)
    rho[d] = (space.node_point(static_cast<std::size_t>(space.node_of_dof(d))) - g.x0).norm();

  struct Sample {
    double t, rho, v;
  };
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto col = U.col(static_cast<Eigen::Index>(i));
    const double floor = 1e-10 * col.cwiseAbs().maxCoeff();
    for (std::size_t d = 0; d < rho.size(); ++d) {
      const double v = std::abs(col[static_cast<Eigen::Index>(d)]);
      if (std::max(std::sqrt(ts[i]), rho[d]) >= 2.0 * h && v > floor && v > 0.0) samples.push_back({ts[i], rho[d], v});
    }
  }
  auto log_bound = [](double logC, const Sample& s) {
    return logC - 2.0 * std::log(std::sqrt(s.t) + s.rho) - s.rho * s.rho / (std::exp(logC) * s.t);
  };
  GaussianFit fit;
  fit.samples = samples.size();
  double logC = -std::numeric_limits<double>::infinity();
  for (const Sample& s : samples) {
    const double target = std::log(s.v);
    double lo = -60.0, hi = 60.0;
    if (log_bound(lo, s) >= target) {
      logC = std::max(logC, lo);
      continue;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (log_bound(mid, s) >= target ? hi : lo) = mid;
    }
    logC = std::max(logC, hi);
  }
  if (samples.empty()) return fit;
  fit.C = std::exp(logC);
  double ss = 0.0;
  for (const Sample& s : samples) {
    const double r = (log_bound(logC, s) - std::log(s.v)) / std::log(10.0);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(samples.size()));
  return fit;
}

double l1_bound(const GreenField& g) {
  const FESpace& space = *g.space;
  const PointSampler q = quadrature_sampler(space);
  const SparseMatrix S = q.value * dof_embedding(space);
  double best = 0.0;
  const std::size_t chunk = 32;
  for (std::size_t b = 0; b < g.times.size(); b += chunk) {
    const std::size_t e = std::min(g.times.size(), b + chunk);
    const std::vector<double> tc(g.times.begin() + static_cast<long>(b), g.times.begin() + static_cast<long>(e));
    const Matrix V0 = S * g.synthesize(tc, 0), V1 = S * g.synthesize(tc, 1);
    for (std::size_t i = 0; i < tc.size(); ++i) {
      double a = 0.0, c = 0.0;
      for (std::size_t r = 0; r < q.weights.size(); ++r) {
        a += q.weights[r] * std::abs(V0(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
        c += q.weights[r] * std::abs(V1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
      }
      best = std::max(best, a + tc[i] * c);
    }
  }
  return best;
}

}  // namespace pfem
