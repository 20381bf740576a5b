#include "femlocal/errors.hpp"
#include "femlocal/mesh.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace femlocal;

namespace {

bool contains_vertex(const Mesh& m, const Point& p) {
  return std::any_of(m.vertices.begin(), m.vertices.end(), [&](const Point& v) { return (v - p).norm() < 1e-14; });
}

}  // namespace

TEST_CASE("initial meshes") {
  const Mesh square = generate_initial_mesh(DomainSpec::unit_square());
  CHECK(square.vertex_count() == 4);
  CHECK(square.element_count() == 2);
  for (int e = 0; e < 2; ++e) CHECK(signed_area(square.element_vertices(e)) > 0.0);
  CHECK(validate_mesh(square).empty());

  const Mesh l = generate_initial_mesh(DomainSpec::lshape());
  CHECK(l.element_count() == 6);
  CHECK(contains_vertex(l, Point(0.0, 0.0)));
  CHECK(validate_mesh(l).empty());
  double area = 0.0;
  for (int e = 0; e < l.element_count(); ++e) area += signed_area(l.element_vertices(e));
  CHECK(area == doctest::Approx(3.0).epsilon(1e-14));

  const Mesh rect = generate_initial_mesh(DomainSpec::rectangle({0, 0}, {2, 1}));
  for (const BoundaryEdge& b : rect.boundary) CHECK(b.tag == BoundaryTag::Dirichlet);
  CHECK(rect.boundary.size() == 4);

  CHECK_THROWS_AS(DomainSpec::kind_from_name("disk"), ConfigError);
  CHECK(DomainSpec::kind_from_name("lshape") == DomainKind::LShape);
}

TEST_CASE("boundary tags follow the sides") {
  using enum BoundaryTag;
  const Mesh l = refine_uniformly(generate_initial_mesh(DomainSpec::lshape({Dirichlet, Dirichlet, Dirichlet, Neumann,
                                                                            Neumann, Dirichlet})),
                                  4);
  for (const BoundaryEdge& b : l.boundary) {
    const Point m = 0.5 * (l.vertices[b.vertices[0]] + l.vertices[b.vertices[1]]);
    const bool right_or_top = std::abs(m.x() - 1.0) < 1e-14 || std::abs(m.y() - 1.0) < 1e-14;
    CHECK((b.tag == Neumann) == right_or_top);
  }
}

TEST_CASE("bisection") {
  const Mesh square = generate_initial_mesh(DomainSpec::unit_square());
  const std::vector<int> all{0, 1};
  const Mesh four = bisect(square, all);
  CHECK(four.element_count() == 4);
  CHECK(validate_mesh(four).empty());

  // One marked element forces its refinement-edge neighbor through the closure.
  const Mesh fine = refine_uniformly(square, 3);
  const MeshTopology topo = build_topology(fine);
  int interior = -1;
  for (int e = 0; e < fine.element_count() && interior < 0; ++e)
    if (topo.edge_kind[topo.element_edges[e][fine.refinement_edge[e]]] == FacetKind::Interior) interior = e;
  REQUIRE(interior >= 0);
  const std::vector<int> one{interior};
  const Mesh closed = bisect(fine, one);
  CHECK(validate_mesh(closed).empty());
  CHECK(closed.element_count() >= fine.element_count() + 2);

  CHECK_THROWS_AS(bisect(square, std::vector<int>{}), ConfigError);

  // Nesting: parent vertices survive in the child.
  for (const Point& v : fine.vertices) CHECK(contains_vertex(closed, v));
}

TEST_CASE("repeated corner bisection keeps finitely many shapes") {
  Mesh m = generate_initial_mesh(DomainSpec::lshape());
  std::vector<double> ratios;
  for (int round = 0; round < 10; ++round) {
    const int e = locate_element(m, Point(0.0, 0.0));
    REQUIRE(e >= 0);
    const std::vector<int> marked{e};
    m = bisect(m, marked);
    REQUIRE(validate_mesh(m).empty());
    ratios.push_back(shape_report(m).min_shape_ratio);
  }
  const double first4 = *std::min_element(ratios.begin(), ratios.begin() + 4);
  CHECK(*std::min_element(ratios.begin(), ratios.end()) == doctest::Approx(first4).epsilon(1e-12));
  CHECK(std::abs(ratios.back() - ratios.front()) < 1e-12);
}

TEST_CASE("uniform refinement: similarity classes and quasi-uniformity") {
  Mesh m = generate_initial_mesh(DomainSpec::lshape());
  const double q0 = shape_report(refine_uniformly(m, 2)).quasi_uniformity_ratio;
  std::vector<double> mins;
  for (int round = 0; round < 8; ++round) {
    m = refine_uniformly(m, 1);
    mins.push_back(shape_report(m).min_shape_ratio);
  }
  CHECK(*std::min_element(mins.begin(), mins.end()) ==
        doctest::Approx(*std::min_element(mins.begin(), mins.begin() + 4)).epsilon(1e-12));
  std::set<long long> distinct;
  for (double r : mins) distinct.insert(std::llround(r * 1e10));
  CHECK(distinct.size() <= 4);
  CHECK(shape_report(refine_uniformly(m, 2)).quasi_uniformity_ratio == doctest::Approx(shape_report(m).quasi_uniformity_ratio).epsilon(1e-12));
  CHECK(q0 >= 1.0);
}

TEST_CASE("grading") {
  const Mesh base = refine_uniformly(generate_initial_mesh(DomainSpec::lshape()), 2);
  const ShapeReport before = shape_report(base);
  const Mesh same = grade_toward(base, Point(0, 0), 1.0, before.h_max);
  CHECK(same.element_count() == base.element_count());

  const Mesh graded = grade_toward(base, Point(0, 0), 0.5, 1e-3);
  CHECK(validate_mesh(graded).empty());
  const ShapeReport after = shape_report(graded);
  CHECK(after.quasi_uniformity_ratio > 100.0);
  for (int e = 0; e < graded.element_count(); ++e) {
    const TriangleVertices v = graded.element_vertices(e);
    CHECK(diameter(v) <= std::max(1e-3, 0.5 * barycenter(v).norm()) * (1 + 1e-12));
  }
  // Newest-vertex bisection of the initial mesh cannot create new similarity classes.
  const double floor_ratio = shape_report(refine_uniformly(generate_initial_mesh(DomainSpec::lshape()), 4)).min_shape_ratio;
  CHECK(after.min_shape_ratio >= floor_ratio - 1e-12);

  CHECK_THROWS_AS(grade_toward(base, Point(0, 0), 0.0, 1e-3), ConfigError);
  CHECK_THROWS_AS(grade_toward(base, Point(0, 0), 0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(grade_toward(base, Point(0.5, -0.5), 0.5, 1e-2), ConfigError);
  CHECK_THROWS_AS(grade_toward(base, Point(0, 0), 0.5, 1e-9, 2000), ResourceError);
}

TEST_CASE("shape report closed forms") {
  Mesh eq;
  eq.vertices = {Point(0, 0), Point(2, 0), Point(1, std::sqrt(3.0))};
  eq.elements = {{0, 1, 2}};
  eq.refinement_edge = {0};
  eq.parent = {-1};
  const ShapeReport r = shape_report(eq);
  CHECK(r.diameters[0] == doctest::Approx(2.0));
  CHECK(r.shape_ratios[0] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));

  Mesh right;
  right.vertices = {Point(0, 0), Point(1, 0), Point(0, 1)};
  right.elements = {{0, 1, 2}};
  right.refinement_edge = {0};
  right.parent = {-1};
  const ShapeReport s = shape_report(right);
  CHECK(s.diameters[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.inradii[0] == doctest::Approx((2.0 - std::sqrt(2.0)) / 2.0).epsilon(1e-15));
  CHECK(s.h_min <= s.h_max);
}

TEST_CASE("ball subdomains") {
  const Mesh m = refine_uniformly(generate_initial_mesh(DomainSpec::unit_square()), 6);
  const BallSubdomain huge = ball_subdomain(m, Point(0.5, 0.5), 10.0);
  CHECK(static_cast<int>(huge.inner_elements.size()) == m.element_count());

  const ShapeReport sr = shape_report(m);
  const Point c = barycenter(m.element_vertices(17));
  const BallSubdomain tiny = ball_subdomain(m, c, 0.5 * *std::min_element(sr.inradii.begin(), sr.inradii.end()));
  CHECK(tiny.inner_elements.empty());
  REQUIRE(tiny.touching_elements.size() == 1);
  CHECK(tiny.touching_elements[0] == 17);

  const BallSubdomain outside = ball_subdomain(m, Point(3.0, 3.0), 0.1);
  CHECK(outside.degenerate);

  const double radii[] = {0.05, 0.1, 0.2, 0.3};
  for (int i = 0; i + 1 < 4; ++i) {
    const BallSubdomain a = ball_subdomain(m, Point(0.4, 0.55), radii[i]);
    const BallSubdomain b = ball_subdomain(m, Point(0.4, 0.55), radii[i + 1]);
    for (int e = 0; e < m.element_count(); ++e) {
      CHECK((!a.is_inner[e] || b.is_inner[e]));
      CHECK((!a.is_touching[e] || b.is_touching[e]));
      CHECK((!a.is_inner[e] || a.is_touching[e]));
    }
    for (int e : a.inner_elements)
      for (int v : m.elements[e]) CHECK((m.vertices[v] - a.center).norm() <= a.radius * (1 + 1e-12) + 1e-12);
  }
}

TEST_CASE("mesh condition") {
  const Mesh m = refine_uniformly(generate_initial_mesh(DomainSpec::unit_square()), 4);
  const double h = shape_report(m).h_max;
  const BallSubdomain ball = ball_subdomain(m, Point(0.5, 0.5), 0.2);
  const MeshCondition ok = check_mesh_condition(m, ball, 32.0 * h, 1.0 / 16.0);
  CHECK(ok.pass);
  CHECK(ok.max_ratio == doctest::Approx(1.0 / 32.0));
  CHECK_FALSE(check_mesh_condition(m, ball, h, 1.0 / 16.0).pass);
  CHECK_THROWS_AS(check_mesh_condition(m, ball, 0.0, 0.25), ConfigError);

  const Mesh graded = grade_toward(m, Point(0.5, 0.5), 0.3, 0.25 / 16.0);
  const BallSubdomain g = ball_subdomain(graded, Point(0.5, 0.5), 0.01);
  CHECK(check_mesh_condition(graded, g, 0.25, 1.0 / 16.0).pass);
}

TEST_CASE("mesh text round trip") {
  const Mesh m = refine_uniformly(generate_initial_mesh(DomainSpec::lshape({BoundaryTag::Neumann, BoundaryTag::Dirichlet,
                                                                           BoundaryTag::Dirichlet, BoundaryTag::Neumann,
                                                                           BoundaryTag::Dirichlet, BoundaryTag::Dirichlet})),
                                  3);
  std::stringstream buf;
  write_mesh(buf, m);
  const Mesh back = read_mesh(buf);
  REQUIRE(back.vertex_count() == m.vertex_count());
  for (int i = 0; i < m.vertex_count(); ++i) CHECK(back.vertices[i] == m.vertices[i]);
  CHECK(back.elements == m.elements);
  CHECK(back.refinement_edge == m.refinement_edge);
  REQUIRE(back.boundary.size() == m.boundary.size());
  for (std::size_t i = 0; i < m.boundary.size(); ++i) CHECK(back.boundary[i].tag == m.boundary[i].tag);

  std::stringstream bad("3 1 0\n0 0\n1 0\n0 1\n0 2 1 0\n");
  CHECK_THROWS_AS(read_mesh(bad), IoError);
}
