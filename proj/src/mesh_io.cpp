#include "femlocal/errors.hpp"
#include "femlocal/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace femlocal {

void write_mesh(std::ostream& out, const Mesh& mesh) {
  char buf[96];
  out << mesh.vertex_count() << ' ' << mesh.element_count() << ' ' << mesh.boundary.size() << '\n';
  for (const auto& p : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    out << buf;
  }
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << int(mesh.refinement_edge[e]) << '\n';
  }
  for (const auto& be : mesh.boundary)
    out << be.vertices[0] << ' ' << be.vertices[1] << ' ' << (be.tag == BoundaryTag::Dirichlet ? 'D' : 'N') << '\n';
}

Mesh read_mesh(std::istream& in) {
  long nv = -1, ne = -1, nb = -1;
  if (!(in >> nv >> ne >> nb) || nv < 0 || ne < 0 || nb < 0) throw IoError("mesh file: malformed header");
  Mesh m;
  m.vertices.resize(nv);
  for (auto& p : m.vertices)
    if (!(in >> p.x() >> p.y())) throw IoError("mesh file: truncated vertex block");
  m.elements.resize(ne);
  m.refinement_edge.resize(ne);
  m.parent.assign(ne, -1);
  for (long e = 0; e < ne; ++e) {
    int r = 0;
    auto& t = m.elements[e];
    if (!(in >> t[0] >> t[1] >> t[2] >> r)) throw IoError("mesh file: truncated element block");
    if (r < 0 || r > 2) throw IoError("mesh file: refinement edge index out of range");
    m.refinement_edge[e] = static_cast<std::uint8_t>(r);
  }
  m.boundary.resize(nb);
  for (auto& be : m.boundary) {
    std::string tag;
    if (!(in >> be.vertices[0] >> be.vertices[1] >> tag)) throw IoError("mesh file: truncated boundary block");
    if (tag == "D")
      be.tag = BoundaryTag::Dirichlet;
    else if (tag == "N")
      be.tag = BoundaryTag::Neumann;
    else
      throw IoError("mesh file: unknown boundary tag '" + tag + "'");
  }
  if (auto problems = validate_mesh(m); !problems.empty()) throw IoError("mesh file: invalid mesh: " + problems.front());
  return m;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_mesh(out, mesh);
  if (!out) throw IoError("write to '" + path + "' failed");
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_mesh(in);
}

}  // namespace femlocal
