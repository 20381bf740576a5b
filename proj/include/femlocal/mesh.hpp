#pragma once

#include "femlocal/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace femlocal {

enum class BoundaryTag : std::uint8_t { Dirichlet, Neumann };
enum class FacetKind : std::uint8_t { Interior, Dirichlet, Neumann };

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundaryTag tag;
};

enum class DomainKind { UnitSquare, LShape, Rectangle };

/// Polygonal computational domain with one boundary tag per side.
///
/// Sides are listed counter-clockwise. Unit square and rectangle: bottom, right,
/// top, left. L-shape (-1,1)^2 minus [0,1)x(-1,0]: starting at (-1,-1) the sides
/// are bottom, the two edges meeting at the reentrant corner (vertical then
/// horizontal), right, top, left.
struct DomainSpec {
  DomainKind kind = DomainKind::UnitSquare;
  std::vector<BoundaryTag> side_tags;  // empty: every side Dirichlet
  Point lower{0.0, 0.0};               // rectangle only
  Point upper{1.0, 1.0};

  int side_count() const { return kind == DomainKind::LShape ? 6 : 4; }
  BoundaryTag tag_of_side(int side) const;

  static DomainSpec unit_square(std::vector<BoundaryTag> tags = {});
  static DomainSpec lshape(std::vector<BoundaryTag> tags = {});
  static DomainSpec rectangle(Point lower, Point upper, std::vector<BoundaryTag> tags = {});
  /// "unit_square", "lshape" or "rectangle"; anything else is a ConfigError.
  static DomainKind kind_from_name(std::string_view name);
};

/// Conforming triangulation. Elements are positively oriented vertex triples;
/// the refinement edge of element e is the edge opposite vertex refinement_edge[e].
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<std::uint8_t> refinement_edge;
  std::vector<BoundaryEdge> boundary;
  /// Index of the element of the previous generation each element descends from (-1 initially).
  std::vector<int> parent;
  int level = 0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }

  TriangleVertices element_vertices(int e) const {
    TriangleVertices v;
    for (int i = 0; i < 3; ++i) v.col(i) = vertices[elements[e][i]];
    return v;
  }
  double element_diameter(int e) const { return diameter(element_vertices(e)); }
};

/// Edge connectivity derived from a mesh. Edge i of an element is opposite its vertex i.
struct MeshTopology {
  std::vector<std::array<int, 2>> edges;          // sorted vertex pairs
  std::vector<std::array<int, 3>> element_edges;  // global edge ids per element
  std::vector<std::array<int, 2>> edge_elements;  // -1 for missing second neighbor
  std::vector<FacetKind> edge_kind;

  int edge_count() const { return static_cast<int>(edges.size()); }
};

MeshTopology build_topology(const Mesh& mesh);

/// Every violated mesh invariant, described in words. Empty for a valid mesh.
std::vector<std::string> validate_mesh(const Mesh& mesh);

Mesh generate_initial_mesh(const DomainSpec& domain);

/// Newest-vertex bisection of the marked elements, plus the closure needed for conformity.
Mesh bisect(const Mesh& mesh, std::span<const int> marked);

/// Bisects every element `rounds` times.
Mesh refine_uniformly(const Mesh& mesh, int rounds);

inline constexpr int kDefaultElementCap = 4'000'000;

/// Repeatedly bisects the elements for which `needs_refinement` holds until none does.
Mesh refine_while(const Mesh& mesh, const std::function<bool(const Mesh&, int)>& needs_refinement,
                  int max_elements = kDefaultElementCap);

/// Bisects until h_T <= max(h_min, theta * dist(barycenter(T), point)) for every element.
Mesh grade_toward(const Mesh& mesh, const Point& point, double theta, double h_min,
                  int max_elements = kDefaultElementCap);

struct ShapeReport {
  std::vector<double> diameters;
  std::vector<double> inradii;
  std::vector<double> shape_ratios;  // 2 * inradius / diameter
  double h_max = 0.0;
  double h_min = 0.0;
  double min_shape_ratio = 0.0;
  double quasi_uniformity_ratio = 0.0;
};

ShapeReport shape_report(const Mesh& mesh);

/// Closed ball resolved into element sets.
struct BallSubdomain {
  Point center{0.0, 0.0};
  double radius = 0.0;
  std::vector<int> inner_elements;     // closure inside the closed ball
  std::vector<int> touching_elements;  // closure meets the closed ball
  std::vector<char> is_inner;          // per element
  std::vector<char> is_touching;
  bool degenerate = false;             // touching set empty
};

BallSubdomain ball_subdomain(const Mesh& mesh, const Point& center, double radius);

struct MeshCondition {
  bool pass = false;
  double max_ratio = 0.0;
  double threshold = 0.0;
};

/// max over touching elements of h_T / d compared against `threshold`.
MeshCondition check_mesh_condition(const Mesh& mesh, const BallSubdomain& ball, double d, double threshold);

/// Index of the first element whose closure contains x, or -1.
int locate_element(const Mesh& mesh, const Point& x, double tolerance = 1e-12);

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

}  // namespace femlocal
