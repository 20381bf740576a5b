#include "femlocal/mesh.hpp"

#include "femlocal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace femlocal {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

std::array<int, 2> edge_of(const std::array<int, 3>& t, int i) { return {t[(i + 1) % 3], t[(i + 2) % 3]}; }

int longest_edge(const Mesh& mesh, int e) {
  const TriangleVertices v = mesh.element_vertices(e);
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (edge_length(v, i) > edge_length(v, best)) best = i;
  return best;
}

std::vector<BoundaryTag> checked_tags(std::vector<BoundaryTag> tags, int sides) {
  if (tags.empty()) return std::vector<BoundaryTag>(sides, BoundaryTag::Dirichlet);
  if (static_cast<int>(tags.size()) != sides)
    throw ConfigError("domain needs " + std::to_string(sides) + " side tags, got " + std::to_string(tags.size()));
  return tags;
}

}  // namespace

BoundaryTag DomainSpec::tag_of_side(int side) const {
  if (side_tags.empty()) return BoundaryTag::Dirichlet;
  return side_tags.at(side);
}

DomainSpec DomainSpec::unit_square(std::vector<BoundaryTag> tags) {
  DomainSpec d;
  d.kind = DomainKind::UnitSquare;
  d.side_tags = checked_tags(std::move(tags), 4);
  return d;
}

DomainSpec DomainSpec::lshape(std::vector<BoundaryTag> tags) {
  DomainSpec d;
  d.kind = DomainKind::LShape;
  d.side_tags = checked_tags(std::move(tags), 6);
  d.lower = Point(-1.0, -1.0);
  d.upper = Point(1.0, 1.0);
  return d;
}

DomainSpec DomainSpec::rectangle(Point lower, Point upper, std::vector<BoundaryTag> tags) {
  if (!(upper.x() > lower.x() && upper.y() > lower.y())) throw ConfigError("rectangle corners out of order");
  DomainSpec d;
  d.kind = DomainKind::Rectangle;
  d.side_tags = checked_tags(std::move(tags), 4);
  d.lower = lower;
  d.upper = upper;
  return d;
}

DomainKind DomainSpec::kind_from_name(std::string_view name) {
  if (name == "unit_square") return DomainKind::UnitSquare;
  if (name == "lshape") return DomainKind::LShape;
  if (name == "rectangle") return DomainKind::Rectangle;
  throw ConfigError("unknown domain kind '" + std::string(name) + "'");
}

MeshTopology build_topology(const Mesh& mesh) {
  MeshTopology topo;
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(mesh.elements.size() * 2);
  topo.element_edges.resize(mesh.elements.size());
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = edge_of(mesh.elements[e], i);
      auto [it, inserted] = index.try_emplace(edge_key(a, b), topo.edge_count());
      if (inserted) {
        topo.edges.push_back({std::min(a, b), std::max(a, b)});
        topo.edge_elements.push_back({e, -1});
      } else {
        topo.edge_elements[it->second][1] = e;
      }
      topo.element_edges[e][i] = it->second;
    }
  }
  topo.edge_kind.assign(topo.edges.size(), FacetKind::Interior);
  for (const auto& be : mesh.boundary) {
    auto it = index.find(edge_key(be.vertices[0], be.vertices[1]));
    if (it == index.end()) continue;
    topo.edge_kind[it->second] = be.tag == BoundaryTag::Dirichlet ? FacetKind::Dirichlet : FacetKind::Neumann;
  }
  return topo;
}

std::vector<std::string> validate_mesh(const Mesh& mesh) {
  std::vector<std::string> problems;
  const int nv = mesh.vertex_count();
  if (mesh.refinement_edge.size() != mesh.elements.size())
    problems.push_back("refinement_edge size differs from element count");
  std::vector<char> used(nv, 0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    for (int v : mesh.elements[e]) {
      if (v < 0 || v >= nv) {
        problems.push_back("element " + std::to_string(e) + " has invalid vertex index");
        return problems;
      }
      used[v] = 1;
    }
    if (!(signed_area(mesh.element_vertices(e)) > 0.0))
      problems.push_back("element " + std::to_string(e) + " is not positively oriented");
  }
  for (int v = 0; v < nv; ++v)
    if (!used[v]) problems.push_back("vertex " + std::to_string(v) + " belongs to no element");

  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : mesh.elements)
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = edge_of(t, i);
      ++count[edge_key(a, b)];
    }
  std::unordered_map<std::uint64_t, int> tagged;
  for (const auto& be : mesh.boundary) ++tagged[edge_key(be.vertices[0], be.vertices[1])];
  for (const auto& [k, n] : tagged) {
    auto it = count.find(k);
    if (it == count.end() || it->second != 1)
      problems.push_back("tagged boundary edge is not a boundary edge of the mesh");
    if (n != 1) problems.push_back("boundary edge carries more than one tag");
  }
  for (const auto& [k, n] : count) {
    if (n > 2) problems.push_back("edge shared by more than two elements");
    if (n == 1 && !tagged.contains(k)) problems.push_back("boundary edge without tag (or hanging vertex)");
  }
  return problems;
}

Mesh generate_initial_mesh(const DomainSpec& domain) {
  Mesh m;
  auto tag = [&](int side) { return domain.tag_of_side(side); };
  switch (domain.kind) {
    case DomainKind::UnitSquare:
    case DomainKind::Rectangle: {
      const Point lo = domain.kind == DomainKind::UnitSquare ? Point(0, 0) : domain.lower;
      const Point hi = domain.kind == DomainKind::UnitSquare ? Point(1, 1) : domain.upper;
      m.vertices = {lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
      m.elements = {{0, 1, 2}, {0, 2, 3}};
      m.boundary = {{{0, 1}, tag(0)}, {{1, 2}, tag(1)}, {{2, 3}, tag(2)}, {{3, 0}, tag(3)}};
      break;
    }
    case DomainKind::LShape: {
      m.vertices = {Point(-1, -1), Point(0, -1), Point(-1, 0), Point(0, 0),
                    Point(1, 0),   Point(-1, 1), Point(0, 1),  Point(1, 1)};
      m.elements = {{0, 1, 3}, {0, 3, 2}, {2, 3, 5}, {3, 6, 5}, {3, 4, 7}, {3, 7, 6}};
      m.boundary = {{{0, 1}, tag(0)}, {{1, 3}, tag(1)}, {{3, 4}, tag(2)}, {{4, 7}, tag(3)},
                    {{7, 6}, tag(4)}, {{6, 5}, tag(4)}, {{5, 2}, tag(5)}, {{2, 0}, tag(5)}};
      break;
    }
    default:
      throw ConfigError("unknown domain kind");
  }
  m.parent.assign(m.elements.size(), -1);
  m.refinement_edge.resize(m.elements.size());
  for (int e = 0; e < m.element_count(); ++e) m.refinement_edge[e] = static_cast<std::uint8_t>(longest_edge(m, e));
  return m;
}

Mesh bisect(const Mesh& mesh, std::span<const int> marked) {
  if (marked.empty()) throw ConfigError("bisect: no elements marked");
  for (int e : marked)
    if (e < 0 || e >= mesh.element_count()) throw ConfigError("bisect: element index out of range");

  std::unordered_map<std::uint64_t, std::array<int, 2>> adjacent;
  adjacent.reserve(mesh.elements.size() * 2);
  for (int e = 0; e < mesh.element_count(); ++e)
    for (int i = 0; i < 3; ++i) {
      auto [a, b] = edge_of(mesh.elements[e], i);
      auto [it, inserted] = adjacent.try_emplace(edge_key(a, b), std::array<int, 2>{e, -1});
      if (!inserted) it->second[1] = e;
    }

  auto refinement_key = [&](int e) {
    auto [a, b] = edge_of(mesh.elements[e], mesh.refinement_edge[e]);
    return edge_key(a, b);
  };

  // Marked edges map to their midpoint vertex, -1 until created.
  std::unordered_map<std::uint64_t, int> midpoint;
  std::vector<int> work;
  auto mark = [&](std::uint64_t k) {
    if (!midpoint.try_emplace(k, -1).second) return;
    for (int e : adjacent.at(k))
      if (e >= 0) work.push_back(e);
  };
  for (int e : marked) mark(refinement_key(e));
  // Conformity closure: any element with a marked edge also bisects its refinement edge.
  while (!work.empty()) {
    const int e = work.back();
    work.pop_back();
    mark(refinement_key(e));
  }

  Mesh out;
  out.vertices = mesh.vertices;
  out.level = mesh.level + 1;
  out.elements.reserve(mesh.elements.size() + 2 * midpoint.size());

  auto split = [&](auto&& self, const std::array<int, 3>& t, int parent) -> void {
    auto it = midpoint.find(edge_key(t[1], t[2]));
    if (it == midpoint.end()) {
      out.elements.push_back(t);
      out.refinement_edge.push_back(0);
      out.parent.push_back(parent);
      return;
    }
    if (it->second < 0) {
      it->second = out.vertex_count();
      out.vertices.push_back(0.5 * (mesh.vertices[t[1]] + mesh.vertices[t[2]]));
    }
    const int m = it->second;
    self(self, {m, t[0], t[1]}, parent);
    self(self, {m, t[2], t[0]}, parent);
  };

  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const int r = mesh.refinement_edge[e];
    if (!midpoint.contains(refinement_key(e))) {
      out.elements.push_back(t);
      out.refinement_edge.push_back(mesh.refinement_edge[e]);
      out.parent.push_back(e);
      continue;
    }
    split(split, {t[r], t[(r + 1) % 3], t[(r + 2) % 3]}, e);
  }

  for (const auto& be : mesh.boundary) {
    auto it = midpoint.find(edge_key(be.vertices[0], be.vertices[1]));
    if (it == midpoint.end()) {
      out.boundary.push_back(be);
    } else {
      out.boundary.push_back({{be.vertices[0], it->second}, be.tag});
      out.boundary.push_back({{it->second, be.vertices[1]}, be.tag});
    }
  }
  return out;
}

Mesh refine_uniformly(const Mesh& mesh, int rounds) {
  Mesh m = mesh;
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> all(m.element_count());
    for (int e = 0; e < m.element_count(); ++e) all[e] = e;
    m = bisect(m, all);
  }
  return m;
}

Mesh refine_while(const Mesh& mesh, const std::function<bool(const Mesh&, int)>& needs_refinement,
                  int max_elements) {
  Mesh m = mesh;
  for (;;) {
    std::vector<int> marked;
    for (int e = 0; e < m.element_count(); ++e)
      if (needs_refinement(m, e)) marked.push_back(e);
    if (marked.empty()) return m;
    m = bisect(m, marked);
    if (m.element_count() > max_elements)
      throw ResourceError("refinement budget exceeded: " + std::to_string(m.element_count()) + " elements > cap " +
                          std::to_string(max_elements));
  }
}

Mesh grade_toward(const Mesh& mesh, const Point& point, double theta, double h_min, int max_elements) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("grade_toward: theta must lie in (0,1]");
  if (!(h_min > 0.0)) throw ConfigError("grade_toward: h_min must be positive");
  if (locate_element(mesh, point, 1e-10) < 0) throw ConfigError("grade_toward: point outside the domain");
  return refine_while(
      mesh,
      [&](const Mesh& m, int e) {
        const TriangleVertices v = m.element_vertices(e);
        const double target = std::max(h_min, theta * (barycenter(v) - point).norm());
        return diameter(v) > target;
      },
      max_elements);
}

ShapeReport shape_report(const Mesh& mesh) {
  ShapeReport r;
  const int ne = mesh.element_count();
  r.diameters.resize(ne);
  r.inradii.resize(ne);
  r.shape_ratios.resize(ne);
  r.h_max = 0.0;
  r.h_min = std::numeric_limits<double>::infinity();
  r.min_shape_ratio = std::numeric_limits<double>::infinity();
  for (int e = 0; e < ne; ++e) {
    const TriangleVertices v = mesh.element_vertices(e);
    r.diameters[e] = diameter(v);
    r.inradii[e] = inradius(v);
    r.shape_ratios[e] = 2.0 * r.inradii[e] / r.diameters[e];
    r.h_max = std::max(r.h_max, r.diameters[e]);
    r.h_min = std::min(r.h_min, r.diameters[e]);
    r.min_shape_ratio = std::min(r.min_shape_ratio, r.shape_ratios[e]);
  }
  r.quasi_uniformity_ratio = r.h_max / r.h_min;
  return r;
}

BallSubdomain ball_subdomain(const Mesh& mesh, const Point& center, double radius) {
  if (!(radius > 0.0)) throw ConfigError("ball_subdomain: radius must be positive");
  BallSubdomain ball;
  ball.center = center;
  ball.radius = radius;
  const int ne = mesh.element_count();
  ball.is_inner.assign(ne, 0);
  ball.is_touching.assign(ne, 0);
  for (int e = 0; e < ne; ++e) {
    const TriangleVertices v = mesh.element_vertices(e);
    const double reach = radius + 1e-12 * diameter(v);
    bool inner = true;
    for (int i = 0; i < 3; ++i) inner = inner && (v.col(i) - center).norm() <= reach;
    const bool touching = inner || distance_to_triangle(v, center) <= reach;
    if (inner) {
      ball.is_inner[e] = 1;
      ball.inner_elements.push_back(e);
    }
    if (touching) {
      ball.is_touching[e] = 1;
      ball.touching_elements.push_back(e);
    }
  }
  ball.degenerate = ball.touching_elements.empty();
  return ball;
}

MeshCondition check_mesh_condition(const Mesh& mesh, const BallSubdomain& ball, double d, double threshold) {
  if (!(d > 0.0)) throw ConfigError("check_mesh_condition: d must be positive");
  MeshCondition c;
  c.threshold = threshold;
  for (int e : ball.touching_elements) c.max_ratio = std::max(c.max_ratio, mesh.element_diameter(e) / d);
  c.pass = c.max_ratio <= threshold;
  return c;
}

int locate_element(const Mesh& mesh, const Point& x, double tolerance) {
  for (int e = 0; e < mesh.element_count(); ++e) {
    const TriangleVertices v = mesh.element_vertices(e);
    if (barycentric_coordinates(v, x).minCoeff() >= -tolerance) return e;
  }
  return -1;
}

}  // namespace femlocal
