#include "pfem/geometry.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pfem {

namespace {

// Shortest representation that parses back to the same double.
std::string exact(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw InvalidInput("mesh file: bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Vec2& p = mesh.vertices()[i];
    os << exact(p.x()) << ' ' << exact(p.y()) << ' ' << (mesh.boundary_flags()[i] ? 1 : 0) << '\n';
  }
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

MeshPtr read_mesh(std::istream& is) {
  std::size_t nv = 0, nt = 0;
  if (!(is >> nv >> nt)) throw InvalidInput("mesh file: missing header 'nv nt'");
  std::vector<Vec2> verts(nv);
  std::vector<bool> flags(nv);
  std::string sx, sy;
  for (std::size_t i = 0; i < nv; ++i) {
    int flag = 0;
    if (!(is >> sx >> sy >> flag)) throw InvalidInput("mesh file: truncated vertex block");
    verts[i] = Vec2(parse_double(sx), parse_double(sy));
    flags[i] = flag != 0;
  }
  std::vector<Triangle> tris(nt);
  for (auto& t : tris) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw InvalidInput("mesh file: truncated triangle block");
  }
  return std::make_shared<const Mesh>(std::move(verts), std::move(tris), std::move(flags));
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw InvalidInput("cannot open " + path + " for writing");
  write_mesh(os, mesh);
}

MeshPtr load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open " + path);
  return read_mesh(is);
}

}  // namespace pfem
