#include "femlocal/space.hpp"

#include "femlocal/errors.hpp"
#include "femlocal/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

namespace femlocal {

namespace {

/// One-dimensional factor P_a(l) = prod_{s<a} (k l - s) / (s + 1) and its first two derivatives.
struct Factor {
  double value, first, second;
};

Factor lattice_factor(int k, int a, double l) {
  double f[kMaxDegree];
  for (int s = 0; s < a; ++s) f[s] = (k * l - s) / (s + 1);
  Factor r{1.0, 0.0, 0.0};
  for (int s = 0; s < a; ++s) r.value *= f[s];
  for (int s = 0; s < a; ++s) {
    double p = static_cast<double>(k) / (s + 1);
    for (int t = 0; t < a; ++t)
      if (t != s) p *= f[t];
    r.first += p;
  }
  for (int s = 0; s < a; ++s)
    for (int t = 0; t < a; ++t) {
      if (t == s) continue;
      double p = static_cast<double>(k) / (s + 1) * k / (t + 1);
      for (int u = 0; u < a; ++u)
        if (u != s && u != t) p *= f[u];
      r.second += p;
    }
  return r;
}

}  // namespace

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > kMaxDegree)
    throw ConfigError("Lagrange degree must lie in [1, " + std::to_string(kMaxDegree) + "], got " +
                      std::to_string(degree));
  const int k = degree;
  for (int v = 0; v < 3; ++v) {
    std::array<int, 3> a{0, 0, 0};
    a[v] = k;
    lattice_.push_back(a);
  }
  for (int edge = 0; edge < 3; ++edge) {
    const int from = (edge + 1) % 3, to = (edge + 2) % 3;
    for (int s = 1; s < k; ++s) {
      std::array<int, 3> a{0, 0, 0};
      a[from] = k - s;
      a[to] = s;
      lattice_.push_back(a);
    }
  }
  for (int i = 1; i < k; ++i)
    for (int j = 1; i + j < k; ++j) lattice_.push_back({i, j, k - i - j});
}

Eigen::Vector3d LagrangeBasis::node(int i) const {
  const auto& a = lattice_[i];
  return Eigen::Vector3d(a[0], a[1], a[2]) / degree_;
}

LocalVector LagrangeBasis::values(const Eigen::Vector3d& lambda) const {
  LocalVector v(size());
  for (int i = 0; i < size(); ++i) {
    const auto& a = lattice_[i];
    v(i) = lattice_factor(degree_, a[0], lambda(0)).value * lattice_factor(degree_, a[1], lambda(1)).value *
           lattice_factor(degree_, a[2], lambda(2)).value;
  }
  return v;
}

LocalGradients LagrangeBasis::barycentric_gradients(const Eigen::Vector3d& lambda) const {
  LocalGradients g(size(), 3);
  for (int i = 0; i < size(); ++i) {
    const auto& a = lattice_[i];
    const Factor f[3] = {lattice_factor(degree_, a[0], lambda(0)), lattice_factor(degree_, a[1], lambda(1)),
                         lattice_factor(degree_, a[2], lambda(2))};
    g(i, 0) = f[0].first * f[1].value * f[2].value;
    g(i, 1) = f[0].value * f[1].first * f[2].value;
    g(i, 2) = f[0].value * f[1].value * f[2].first;
  }
  return g;
}

Eigen::Matrix3d LagrangeBasis::barycentric_hessian(int i, const Eigen::Vector3d& lambda) const {
  const auto& a = lattice_[i];
  const Factor f[3] = {lattice_factor(degree_, a[0], lambda(0)), lattice_factor(degree_, a[1], lambda(1)),
                       lattice_factor(degree_, a[2], lambda(2))};
  Eigen::Matrix3d h;
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n) {
      double p = 1.0;
      for (int q = 0; q < 3; ++q) {
        if (m == n && q == m)
          p *= f[q].second;
        else if (q == m || q == n)
          p *= f[q].first;
        else
          p *= f[q].value;
      }
      h(m, n) = p;
    }
  return h;
}

const LagrangeBasis& lagrange_basis(int degree) {
  if (degree < 1 || degree > kMaxDegree)
    throw ConfigError("Lagrange degree must lie in [1, " + std::to_string(kMaxDegree) + "], got " +
                      std::to_string(degree));
  static const LagrangeBasis bases[kMaxDegree] = {LagrangeBasis(1), LagrangeBasis(2), LagrangeBasis(3),
                                                  LagrangeBasis(4)};
  return bases[degree - 1];
}

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree) {
  const LagrangeBasis& basis = lagrange_basis(degree);
  const int k = degree;
  const Mesh& m = *mesh;
  const MeshTopology topo = build_topology(m);
  const int nv = m.vertex_count(), ned = topo.edge_count(), ne = m.element_count();
  const int per_edge = k - 1, per_cell = (k - 1) * (k - 2) / 2;
  const int total = nv + per_edge * ned + per_cell * ne;
  const int nloc = basis.size();

  // Provisional numbering: vertices, then edges, then element interiors.
  std::vector<Point> coords(total);
  std::vector<DofClass> cls(total, DofClass::Interior);
  for (int v = 0; v < nv; ++v) coords[v] = m.vertices[v];
  for (int g = 0; g < ned; ++g) {
    const Point& lo = m.vertices[topo.edges[g][0]];
    const Point& hi = m.vertices[topo.edges[g][1]];
    for (int s = 1; s < k; ++s) {
      const int id = nv + per_edge * g + s - 1;
      coords[id] = lo + (static_cast<double>(s) / k) * (hi - lo);
      if (topo.edge_kind[g] == FacetKind::Dirichlet) cls[id] = DofClass::Dirichlet;
      if (topo.edge_kind[g] == FacetKind::Neumann) cls[id] = DofClass::Neumann;
    }
  }
  for (const auto& be : m.boundary)
    for (int v : be.vertices) {
      if (be.tag == BoundaryTag::Dirichlet)
        cls[v] = DofClass::Dirichlet;
      else if (cls[v] == DofClass::Interior)
        cls[v] = DofClass::Neumann;
    }

  std::vector<int> table(static_cast<std::size_t>(ne) * nloc);
  for (int e = 0; e < ne; ++e) {
    const auto& t = m.elements[e];
    int interior = 0;
    for (int i = 0; i < nloc; ++i) {
      const auto& a = basis.multi_index(i);
      const int zeros = (a[0] == 0) + (a[1] == 0) + (a[2] == 0);
      int id = -1;
      if (zeros == 2) {
        id = t[a[0] == k ? 0 : (a[1] == k ? 1 : 2)];
      } else if (zeros == 1) {
        const int opposite = a[0] == 0 ? 0 : (a[1] == 0 ? 1 : 2);
        const int from = (opposite + 1) % 3, to = (opposite + 2) % 3;
        const int g = topo.element_edges[e][opposite];
        const int steps = t[from] < t[to] ? a[to] : a[from];
        id = nv + per_edge * g + steps - 1;
      } else {
        id = nv + per_edge * ned + per_cell * e + interior++;
        const TriangleVertices v = m.element_vertices(e);
        coords[id] = v * basis.node(i);
      }
      table[static_cast<std::size_t>(e) * nloc + i] = id;
    }
  }

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (coords[a].x() != coords[b].x()) return coords[a].x() < coords[b].x();
    if (coords[a].y() != coords[b].y()) return coords[a].y() < coords[b].y();
    return a < b;
  });
  std::vector<int> renumber(total);
  for (int i = 0; i < total; ++i) renumber[order[i]] = i;

  auto space = std::make_shared<FeSpace>();
  space->mesh = std::move(mesh);
  space->degree = degree;
  space->dof_coords.resize(total);
  space->dof_class.resize(total);
  for (int i = 0; i < total; ++i) {
    space->dof_coords[renumber[i]] = coords[i];
    space->dof_class[renumber[i]] = cls[i];
  }
  for (int& id : table) id = renumber[id];
  space->element_dof_table = std::move(table);

  space->dof_element_offsets.assign(total + 1, 0);
  for (int id : space->element_dof_table) ++space->dof_element_offsets[id + 1];
  std::partial_sum(space->dof_element_offsets.begin(), space->dof_element_offsets.end(),
                   space->dof_element_offsets.begin());
  space->dof_elements.resize(space->element_dof_table.size());
  std::vector<int> fill(space->dof_element_offsets.begin(), space->dof_element_offsets.end() - 1);
  for (int e = 0; e < ne; ++e)
    for (int id : space->element_dofs(e)) space->dof_elements[fill[id]++] = e;
  return space;
}

FeFunction::FeFunction(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coefficients(std::move(c)) {
  if (coefficients.size() != space->dof_count())
    throw ConfigError("coefficient vector length " + std::to_string(coefficients.size()) + " differs from DOF count " +
                      std::to_string(space->dof_count()));
}

FieldSample FeFunction::sample(int e, const Eigen::Vector3d& lambda, int order) const {
  const LagrangeBasis& basis = space->basis();
  const auto dofs = space->element_dofs(e);
  const int n = basis.size();
  LocalVector local(n);
  for (int i = 0; i < n; ++i) local(i) = coefficients(dofs[i]);
  FieldSample s;
  s.value = basis.values(lambda).dot(local);
  if (order >= 1) {
    const Eigen::Matrix<double, 2, 3> g = barycentric_gradients(space->mesh->element_vertices(e));
    const Eigen::Vector3d dl = basis.barycentric_gradients(lambda).transpose() * local;
    s.gradient = g * dl;
    if (order >= 2) {
      Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
      for (int i = 0; i < n; ++i)
        if (local(i) != 0.0) h += local(i) * basis.barycentric_hessian(i, lambda);
      s.hessian = g * h * g.transpose();
    }
  }
  return s;
}

double FeFunction::operator()(const Point& x) const {
  const Mesh& m = *space->mesh;
  const int e = locate_element(m, x, 1e-12);
  if (e < 0) throw DataError("point evaluation outside the mesh");
  return sample(e, barycentric_coordinates(m.element_vertices(e), x), 0).value;
}

ElementField FeFunction::field() const {
  return [u = *this](int e, const Eigen::Vector3d& lambda, const Point&, int order) { return u.sample(e, lambda, order); };
}

FeFunction interpolate(SpacePtr space, const std::function<double(const Point&)>& f) {
  Eigen::VectorXd c(space->dof_count());
  for (int i = 0; i < space->dof_count(); ++i) {
    const Point& x = space->dof_coords[i];
    c(i) = f(x);
    if (!std::isfinite(c(i))) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "non-finite value at node %d (%.17g, %.17g)", i, x.x(), x.y());
      throw DataError(buf);
    }
  }
  return FeFunction(std::move(space), std::move(c));
}

FeFunction interpolate(SpacePtr space, const FeFunction& u) {
  if (space == u.space) return u;
  return interpolate(std::move(space), [&u](const Point& x) { return u(x); });
}

ConstrainedSubspace constrained_subspace(SpacePtr space, std::optional<BallSubdomain> ball, bool zero_dirichlet) {
  ConstrainedSubspace sub;
  const int n = space->dof_count();
  sub.free_index.assign(n, -1);
  sub.constrained_index.assign(n, -1);
  if (ball && static_cast<int>(ball->is_touching.size()) != space->mesh->element_count())
    throw ConfigError("constrained_subspace: ball was resolved on a different mesh");
  for (int i = 0; i < n; ++i) {
    bool free = !(zero_dirichlet && space->dof_class[i] == DofClass::Dirichlet);
    if (free && ball)
      for (int e : space->elements_of_dof(i)) free = free && ball->is_touching[e];
    if (free) {
      sub.free_index[i] = sub.free_count();
      sub.free_dofs.push_back(i);
    } else {
      sub.constrained_index[i] = sub.constrained_count();
      sub.constrained_dofs.push_back(i);
    }
  }
  std::ostringstream desc;
  if (ball)
    desc << "ball(center=(" << ball->center.x() << "," << ball->center.y() << "), radius=" << ball->radius << ")";
  else
    desc << "whole domain";
  desc << (zero_dirichlet ? ", Dirichlet DOFs zeroed" : ", Dirichlet DOFs free");
  sub.description = desc.str();
  sub.space = std::move(space);
  sub.ball = std::move(ball);
  sub.zero_dirichlet = zero_dirichlet;
  return sub;
}

double inverse_ratio(const FeFunction& u, int element) {
  const QuadratureRule& q = quadrature_rule(2 * u.space->degree);
  const TriangleVertices v = u.space->mesh->element_vertices(element);
  const double jac = 2.0 * signed_area(v);
  double l2 = 0.0, h1 = 0.0;
  for (int p = 0; p < q.size(); ++p) {
    const FieldSample s = u.sample(element, q.points.row(p).transpose(), 1);
    l2 += q.weights(p) * jac * s.value * s.value;
    h1 += q.weights(p) * jac * s.gradient.squaredNorm();
  }
  if (!(l2 > 0.0)) throw UndefinedError("inverse_ratio: function vanishes on element " + std::to_string(element));
  return diameter(v) * std::sqrt(h1 / l2);
}

void write_function(std::ostream& out, const FeFunction& u) {
  char buf[40];
  out << u.coefficients.size() << '\n';
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", u.coefficients(i));
    out << buf;
  }
}

Eigen::VectorXd read_function_coefficients(std::istream& in) {
  long n = -1;
  if (!(in >> n) || n < 0) throw IoError("function dump: malformed header");
  Eigen::VectorXd c(n);
  for (long i = 0; i < n; ++i)
    if (!(in >> c(i))) throw IoError("function dump: truncated");
  return c;
}

}  // namespace femlocal
