#include "pfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace pfem {

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned k = 0; k < threads; ++k) {
    const std::size_t b = k * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        body(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Vector OperatorPair::solve_mass(const Vector& rhs) const {
  Vector x = mass_factor->solve(rhs);
  if (mass_factor->info() != Eigen::Success) throw InternalError("mass solve failed");
  return x;
}

Vector OperatorPair::solve_stiffness(const Vector& rhs) const {
  Vector x = stiffness_factor->solve(rhs);
  if (stiffness_factor->info() != Eigen::Success) throw InternalError("stiffness solve failed");
  return x;
}

namespace {

struct ElementMatrices {
  std::vector<Eigen::Triplet<double>> mass, stiffness;
  // First ellipticity violation seen in this block: (element, point).
  int bad_element = -1;
  Vec2 bad_point = Vec2::Zero();
  std::string bad_message;
};

void assemble_block(const FESpace& space, const CoefficientField& a, const TriangleQuadrature& quad,
                    std::size_t begin, std::size_t end, ElementMatrices& out) {
  const Mesh& m = space.mesh();
  const int nloc = space.local_size();
  std::vector<double> phi(nloc), dphi(3 * nloc);
  Matrix grads(nloc, 2);
  Matrix Ml(nloc, nloc), Al(nloc, nloc);
  const double lo = (1.0 / a.lambda) * (1.0 - 1e-12), hi = a.lambda * (1.0 + 1e-12);
  for (std::size_t t = begin; t < end; ++t) {
    Ml.setZero();
    Al.setZero();
    const double area = m.area(t);
    const auto g = space.grad_lambda(t);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& lam = quad.points()[q];
      const double w = area * quad.weights()[q];
      const Vec2 x = space.map_to_physical(t, lam);
      const Mat2 ax = a.eval(x);
      if (out.bad_element < 0) {
        const double mid = 0.5 * (ax(0, 0) + ax(1, 1));
        const double rad = std::hypot(0.5 * (ax(0, 0) - ax(1, 1)), ax(0, 1));
        if (!(mid - rad >= lo && mid + rad <= hi) || ax(0, 1) != ax(1, 0)) {
          out.bad_element = static_cast<int>(t);
          out.bad_point = x;
          std::ostringstream msg;
          msg << std::setprecision(17) << "coefficient '" << a.name << "' violates ellipticity (Lambda = " << a.lambda
              << ") at (" << x.x() << ", " << x.y() << "): eigenvalues " << mid - rad << ", " << mid + rad;
          out.bad_message = msg.str();
        }
      }
      space.basis().eval(lam, phi);
      space.basis().eval_dlambda(lam, dphi);
      for (int k = 0; k < nloc; ++k) {
        Vec2 gr = Vec2::Zero();
        for (int c = 0; c < 3; ++c) gr += dphi[3 * k + c] * g.row(c).transpose();
        grads.row(k) = gr.transpose();
      }
      const Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(phi.data(), nloc);
      Ml.noalias() += w * pv * pv.transpose();
      Al.noalias() += w * grads * ax * grads.transpose();
    }
    const auto nodes = space.element_nodes(t);
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j < nloc; ++j) {
        out.mass.emplace_back(nodes[i], nodes[j], Ml(i, j));
        out.stiffness.emplace_back(nodes[i], nodes[j], Al(i, j));
      }
  }
}

SparseMatrix reduce(const SparseMatrix& full, const FESpace& space) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Eigen::Index c = 0; c < full.outerSize(); ++c) {
    const int dc = space.dof_of_node(static_cast<std::size_t>(c));
    if (dc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
      const int dr = space.dof_of_node(static_cast<std::size_t>(it.row()));
      if (dr >= 0) trip.emplace_back(dr, dc, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(space.num_dofs());
  SparseMatrix r(n, n);
  r.setFromTriplets(trip.begin(), trip.end());
  return r;
}

// Symmetrize exactly: per-element local matrices are symmetric only up to rounding in the
// product grads * a * grads^T.
SparseMatrix symmetric_part(const SparseMatrix& s) {
  SparseMatrix t = s.transpose();
  SparseMatrix r = 0.5 * (s + t);
  r.prune(0.0);
  return r;
}

}  // namespace

OperatorPairPtr assemble(FESpacePtr space, CoefficientPtr a, int quadrature_order) {
  if (!space || !a) throw InvalidInput("assemble: null space or coefficient");
  const int order = quadrature_order > 0 ? quadrature_order : space->quadrature_order();
  if (order < 2 * space->degree()) throw InvalidInput("assemble: quadrature order below 2r");
  const TriangleQuadrature quad(order);
  const std::size_t nt = space->mesh().num_triangles();

  // Fixed block partition so the triplet order (and hence rounding) never depends on thread count.
  const std::size_t block = 256;
  const std::size_t nblocks = (nt + block - 1) / block;
  std::vector<ElementMatrices> parts(nblocks);
  parallel_for(nblocks, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      assemble_block(*space, *a, quad, k * block, std::min(nt, (k + 1) * block), parts[k]);
  });
  for (const auto& p : parts)
    if (p.bad_element >= 0) throw EllipticityViolation(p.bad_message, p.bad_point);

  std::vector<Eigen::Triplet<double>> mt, at;
  for (auto& p : parts) {
    mt.insert(mt.end(), p.mass.begin(), p.mass.end());
    at.insert(at.end(), p.stiffness.begin(), p.stiffness.end());
  }
  const auto nn = static_cast<Eigen::Index>(space->num_nodes());
  auto pair = std::make_shared<OperatorPair>();
  pair->M_full.resize(nn, nn);
  pair->A_full.resize(nn, nn);
  pair->M_full.setFromTriplets(mt.begin(), mt.end());
  pair->A_full.setFromTriplets(at.begin(), at.end());
  pair->M_full = symmetric_part(pair->M_full);
  pair->A_full = symmetric_part(pair->A_full);
  pair->M = reduce(pair->M_full, *space);
  pair->A = reduce(pair->A_full, *space);
  pair->space = std::move(space);
  pair->coefficient = std::move(a);
  pair->quadrature_order = order;

  auto mf = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(pair->M);
  if (mf->info() != Eigen::Success) throw InternalError("mass matrix factorization failed");
  pair->mass_factor = mf;
  if (pair->A.rows() > 0) {
    auto af = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(pair->A);
    if (af->info() != Eigen::Success) throw InternalError("stiffness matrix factorization failed");
    pair->stiffness_factor = af;
  } else {
    pair->stiffness_factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
  }
  return pair;
}

QuadraturePerturbation quadrature_perturbation(const FESpacePtr& space, const CoefficientPtr& a) {
  const int base = space->quadrature_order();
  const auto p1 = assemble(space, a, base);
  const auto p2 = assemble(space, a, 2 * base);
  const double dA = (p2->A - p1->A).norm() / p2->A.norm();
  const double dM = (p2->M - p1->M).norm() / p2->M.norm();
  return {base, 2 * base, dA, dM};
}

Vector load_vector(const FESpace& space, const ScalarFunction& f, int quadrature_order) {
  const TriangleQuadrature quad(quadrature_order > 0 ? quadrature_order : space.quadrature_order());
  const Mesh& m = space.mesh();
  const int nloc = space.local_size();
  std::vector<double> phi(nloc);
  Vector b = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.area(t);
    const auto nodes = space.element_nodes(t);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& lam = quad.points()[q];
      const double fx = f(space.map_to_physical(t, lam)) * area * quad.weights()[q];
      space.basis().eval(lam, phi);
      for (int k = 0; k < nloc; ++k) b[nodes[k]] += fx * phi[k];
    }
  }
  return b;
}

Vector divergence_load(const FESpace& space, const GradientFunction& g, int quadrature_order) {
  const TriangleQuadrature quad(quadrature_order > 0 ? quadrature_order : space.quadrature_order());
  const Mesh& m = space.mesh();
  const int nloc = space.local_size();
  std::vector<double> dphi(3 * nloc);
  Vector b = Vector::Zero(static_cast<Eigen::Index>(space.num_nodes()));
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.area(t);
    const auto gl = space.grad_lambda(t);
    const auto nodes = space.element_nodes(t);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& lam = quad.points()[q];
      const Vec2 gx = g(space.map_to_physical(t, lam)) * (area * quad.weights()[q]);
      space.basis().eval_dlambda(lam, dphi);
      for (int k = 0; k < nloc; ++k) {
        Vec2 gr = Vec2::Zero();
        for (int c = 0; c < 3; ++c) gr += dphi[3 * k + c] * gl.row(c).transpose();
        b[nodes[k]] += gx.dot(gr);
      }
    }
  }
  return b;
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
  const auto old = os.precision(17);
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(old);
}

void save_triplets(const std::string& path, const SparseMatrix& m) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot open " + path + " for writing");
  write_triplets(f, m);
}

void write_vector(std::ostream& os, const Vector& v) {
  const auto old = os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << i << ' ' << v[i] << '\n';
  os.precision(old);
}

}  // namespace pfem
