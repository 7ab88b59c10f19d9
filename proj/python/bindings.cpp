#include "pfem/assembly.hpp"
#include "pfem/evolution.hpp"
#include "pfem/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace {

// pybind11 holders must be non-const; the core hands out shared_ptr<const T>.
using MeshHolder = std::shared_ptr<pfem::Mesh>;
using PairHolder = std::shared_ptr<pfem::OperatorPair>;

MeshHolder hold(pfem::MeshPtr m) { return std::const_pointer_cast<pfem::Mesh>(std::move(m)); }

pfem::Polygon polygon_from(const std::vector<std::array<double, 2>>& pts) {
  if (pts.empty()) return pfem::Polygon::unit_square();
  std::vector<pfem::Vec2> v;
  for (const auto& p : pts) v.emplace_back(p[0], p[1]);
  return pfem::Polygon(std::move(v));
}

pfem::SweepReport dispatch(const std::string& experiment, const pfem::ExperimentConfig& c) {
  if (experiment == "mesh") return pfem::run_mesh_report(c);
  if (experiment == "assemble") return pfem::run_assembly_report(c);
  if (experiment == "semigroup") return pfem::run_semigroup_sweep(c);
  if (experiment == "maxreg") return pfem::run_maxreg_sweep(c);
  if (experiment == "gradreg") return pfem::run_gradient_maxreg_sweep(c);
  if (experiment == "converge") return pfem::run_error_convergence(c);
  if (experiment == "green") return pfem::run_green_diagnostics(c);
  if (experiment == "superapprox") return pfem::run_superapprox_sweep(c);
  if (experiment == "delta") return pfem::run_delta_sweep(c);
  throw pfem::InvalidInput("unknown experiment " + experiment);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite element core: meshes, operators, spectral propagation and stability sweeps.";

  py::register_exception<pfem::InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  py::class_<pfem::Mesh, MeshHolder>(m, "Mesh")
      .def_property_readonly("vertices",
                             [](const pfem::Mesh& mesh) {
                               pfem::Matrix v(static_cast<Eigen::Index>(mesh.num_vertices()), 2);
                               for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
                                 v.row(static_cast<Eigen::Index>(i)) = mesh.vertices()[i].transpose();
                               return v;
                             })
      .def_property_readonly("triangles", &pfem::Mesh::triangles)
      .def_property_readonly("boundary", &pfem::Mesh::boundary_flags)
      .def_property_readonly("h", &pfem::Mesh::h)
      .def("__len__", &pfem::Mesh::num_triangles);

  m.def(
      "build_polygon_mesh",
      [](const std::vector<std::array<double, 2>>& polygon, double target_h) {
        return hold(pfem::build_polygon_mesh(polygon_from(polygon), target_h));
      },
      py::arg("polygon") = std::vector<std::array<double, 2>>{}, py::arg("target_h") = 0.125);
  m.def("refine_uniform", [](const MeshHolder& mesh) { return hold(pfem::refine_uniform(mesh)); });
  m.def("mesh_quality", [](const pfem::Mesh& mesh) {
    const auto q = pfem::measure_quality(mesh);
    return py::dict(py::arg("h") = q.h, py::arg("rho_min") = q.rho_min, py::arg("K") = q.K);
  });
  m.def("domain_metrics", [](const std::vector<std::array<double, 2>>& polygon) {
    const auto d = pfem::domain_metrics(polygon_from(polygon));
    return py::dict(py::arg("R0") = d.R0, py::arg("K0") = d.K0, py::arg("min_angle") = d.min_angle);
  });
  m.def("write_mesh", [](const pfem::Mesh& mesh) {
    std::ostringstream os;
    pfem::write_mesh(os, mesh);
    return os.str();
  });
  m.def("read_mesh", [](const std::string& text) {
    std::istringstream is(text);
    return hold(pfem::read_mesh(is));
  });

  py::class_<pfem::OperatorPair, PairHolder>(m, "OperatorPair")
      .def_readonly("M", &pfem::OperatorPair::M)
      .def_readonly("A", &pfem::OperatorPair::A)
      .def_readonly("quadrature_order", &pfem::OperatorPair::quadrature_order)
      .def_property_readonly("num_dofs", [](const pfem::OperatorPair& p) { return p.A.rows(); });

  m.def(
      "assemble",
      [](const MeshHolder& mesh, int degree, const std::string& coefficient,
         const std::map<std::string, double>& params, const std::vector<std::array<double, 2>>& polygon) {
        const auto a = pfem::make_sample(coefficient, params, polygon_from(polygon));
        return std::const_pointer_cast<pfem::OperatorPair>(pfem::assemble(pfem::build_space(mesh, degree), a));
      },
      py::arg("mesh"), py::arg("degree") = 1, py::arg("coefficient") = "identity",
      py::arg("params") = std::map<std::string, double>{}, py::arg("polygon") = std::vector<std::array<double, 2>>{});

  m.def(
      "eigenvalues",
      [](const pfem::OperatorPair& pair, std::size_t cap) { return pfem::spectral_decompose(pair, cap).eigenvalues; },
      py::arg("pair"), py::arg("cap") = pfem::kDenseCap);

  m.def("catalogue", [] { return pfem::catalogue_json().dump(); });

  m.def(
      "run",
      [](const std::string& experiment, const std::string& config_json) {
        const auto c = pfem::config_from_json(pfem::Json::parse(config_json));
        pfem::SweepReport rep = [&] {
          py::gil_scoped_release release;
          return dispatch(experiment, c);
        }();
        return rep.to_json().dump(2);
      },
      py::arg("experiment"), py::arg("config_json") = "{}");
}
