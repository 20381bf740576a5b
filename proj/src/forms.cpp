#include "femlocal/forms.hpp"

#include "femlocal/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

namespace femlocal {

namespace {

std::atomic<int> g_threads{1};

/// Runs body(e) for e in [0, count) on the configured number of threads. The first
/// exception (by element order) is rethrown after all workers finish.
void parallel_elements(int count, const std::function<void(int)>& body) {
  const int threads = std::clamp(assembly_threads(), 1, std::max(1, count));
  if (threads == 1) {
    for (int e = 0; e < count; ++e) body(e);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        const int begin = static_cast<int>(static_cast<long>(count) * t / threads);
        const int end = static_cast<int>(static_cast<long>(count) * (t + 1) / threads);
        try {
          for (int e = begin; e < end; ++e) body(e);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

/// Basis values and barycentric gradients tabulated at the points of a rule.
struct BasisTable {
  std::vector<LocalVector> values;
  std::vector<LocalGradients> gradients;

  BasisTable(const LagrangeBasis& basis, const QuadratureRule& quad) {
    for (int q = 0; q < quad.size(); ++q) {
      const Eigen::Vector3d lambda = quad.points.row(q).transpose();
      values.push_back(basis.values(lambda));
      gradients.push_back(basis.barycentric_gradients(lambda));
    }
  }
};

double min_eigenvalue_symmetric(const Eigen::Matrix2d& a) {
  const double mean = 0.5 * (a(0, 0) + a(1, 1));
  const double half_diff = 0.5 * (a(0, 0) - a(1, 1));
  return mean - std::hypot(half_diff, a(0, 1));
}

std::string element_context(int e) { return " on element " + std::to_string(e); }

struct ElementSystem {
  LocalMatrix matrix;
  LocalVector load;
};

/// Local matrix and source load of one element.
ElementSystem element_system(const FeSpace& space, const CoefficientField& coeff, const QuadratureRule& quad,
                             const BasisTable& table, int e, bool with_load, double& min_eig) {
  const int n = space.local_dof_count();
  const TriangleVertices v = space.mesh->element_vertices(e);
  const Eigen::Matrix<double, 2, 3> g = barycentric_gradients(v);
  const double jac = 2.0 * signed_area(v);
  ElementSystem out{LocalMatrix::Zero(n, n), LocalVector::Zero(n)};
  Eigen::Matrix<double, Eigen::Dynamic, 2, 0, kMaxLocalDofs, 2> grads(n, 2);
  for (int q = 0; q < quad.size(); ++q) {
    const Point x = v * quad.points.row(q).transpose();
    const double w = quad.weights(q) * jac;
    const Eigen::Matrix2d a = coeff.A(x);
    if (!a.allFinite()) throw DataError("non-finite coefficient A" + element_context(e));
    if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * a.cwiseAbs().maxCoeff())
      throw ConfigError("coefficient A is not symmetric" + element_context(e));
    const double lam = min_eigenvalue_symmetric(a);
    if (!(lam > 0.0)) throw ConfigError("coefficient A is not positive definite" + element_context(e));
    min_eig = std::min(min_eig, lam);
    grads.noalias() = table.gradients[q] * g.transpose();
    const LocalVector& phi = table.values[q];
    out.matrix.noalias() += w * (grads * a * grads.transpose());
    if (coeff.b) {
      const Eigen::Vector2d b = coeff.b(x);
      if (!b.allFinite()) throw DataError("non-finite coefficient b" + element_context(e));
      out.matrix.noalias() += w * (phi * (grads * b).transpose());
    }
    if (coeff.c) {
      const double c = coeff.c(x);
      if (!std::isfinite(c)) throw DataError("non-finite coefficient c" + element_context(e));
      out.matrix.noalias() += (w * c) * (phi * phi.transpose());
    }
    if (with_load && coeff.f) {
      const double f = coeff.f(x);
      if (!std::isfinite(f)) throw DataError("non-finite source f" + element_context(e));
      out.load += (w * f) * phi;
    }
  }
  return out;
}

void check_quadrature(const FeSpace& space, const QuadratureRule& quad) {
  if (quad.exactness_degree < 2 * space.degree)
    throw ConfigError("assembly quadrature must be exact to degree 2k = " + std::to_string(2 * space.degree));
}

/// Scatters element matrices into free/free and free/constrained blocks, in element order.
void scatter(const ConstrainedSubspace& sub, const std::vector<LocalMatrix>& local, AssembledSystem& sys) {
  const FeSpace& space = *sub.space;
  std::vector<Eigen::Triplet<double>> ff, fc;
  const int n = space.local_dof_count();
  ff.reserve(local.size() * n * n);
  for (int e = 0; e < static_cast<int>(local.size()); ++e) {
    if (local[e].size() == 0) continue;
    const auto dofs = space.element_dofs(e);
    for (int i = 0; i < n; ++i) {
      const int row = sub.free_index[dofs[i]];
      if (row < 0) continue;
      for (int j = 0; j < n; ++j) {
        const double value = local[e](i, j);
        if (const int col = sub.free_index[dofs[j]]; col >= 0)
          ff.emplace_back(row, col, value);
        else
          fc.emplace_back(row, sub.constrained_index[dofs[j]], value);
      }
    }
  }
  sys.matrix.resize(sub.free_count(), sub.free_count());
  sys.matrix.setFromTriplets(ff.begin(), ff.end());
  sys.coupling.resize(sub.free_count(), sub.constrained_count());
  sys.coupling.setFromTriplets(fc.begin(), fc.end());
}

AssembledSystem assemble_impl(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                              const QuadratureRule& quad, bool with_load) {
  const FeSpace& space = *subspace.space;
  check_quadrature(space, quad);
  if (!coeff.A) throw ConfigError("coefficient A is required");
  const int ne = space.mesh->element_count();
  const BasisTable table(space.basis(), quad);

  std::vector<LocalMatrix> local(ne);
  std::vector<LocalVector> local_load(ne);
  std::vector<double> min_eig(ne, std::numeric_limits<double>::infinity());
  parallel_elements(ne, [&](int e) {
    bool any_free = false;
    for (int d : space.element_dofs(e)) any_free = any_free || subspace.free_index[d] >= 0;
    if (!any_free) return;
    ElementSystem es = element_system(space, coeff, quad, table, e, with_load, min_eig[e]);
    local[e] = std::move(es.matrix);
    local_load[e] = std::move(es.load);
  });

  AssembledSystem sys;
  sys.subspace = subspace;
  sys.symmetric = !coeff.has_convection();
  sys.min_eigenvalue_A = *std::min_element(min_eig.begin(), min_eig.end());
  scatter(subspace, local, sys);

  Eigen::VectorXd full_load = Eigen::VectorXd::Zero(space.dof_count());
  if (with_load) {
    for (int e = 0; e < ne; ++e) {
      if (local_load[e].size() == 0) continue;
      const auto dofs = space.element_dofs(e);
      for (int i = 0; i < space.local_dof_count(); ++i) full_load(dofs[i]) += local_load[e](i);
    }
    if (coeff.g_N) {
      const Mesh& mesh = *space.mesh;
      const MeshTopology topo = build_topology(mesh);
      const LineRule line = gauss_legendre(space.degree + 2);
      const LagrangeBasis& basis = space.basis();
      for (int g = 0; g < topo.edge_count(); ++g) {
        if (topo.edge_kind[g] != FacetKind::Neumann) continue;
        const int e = topo.edge_elements[g][0];
        const auto& t = mesh.elements[e];
        int local_edge = 0;
        while (topo.element_edges[e][local_edge] != g) ++local_edge;
        const int from = (local_edge + 1) % 3, to = (local_edge + 2) % 3;
        const Point a = mesh.vertices[t[from]], b = mesh.vertices[t[to]];
        const double len = (b - a).norm();
        const Eigen::Vector2d normal = Eigen::Vector2d(b.y() - a.y(), a.x() - b.x()) / len;
        const auto dofs = space.element_dofs(e);
        for (int q = 0; q < line.points.size(); ++q) {
          const double s = line.points(q);
          Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
          lambda(from) = 1.0 - s;
          lambda(to) = s;
          const Point x = (1.0 - s) * a + s * b;
          const double gn = coeff.g_N(x, normal);
          if (!std::isfinite(gn)) throw DataError("non-finite Neumann datum" + element_context(e));
          const LocalVector phi = basis.values(lambda);
          for (int i = 0; i < basis.size(); ++i) full_load(dofs[i]) -= line.weights(q) * len * gn * phi(i);
        }
      }
    }
  }
  sys.load = sys.restrict_free(full_load);

  Eigen::VectorXd lifted = Eigen::VectorXd::Zero(space.dof_count());
  if (with_load && coeff.g_D)
    for (int d : subspace.constrained_dofs)
      if (space.dof_class[d] == DofClass::Dirichlet) {
        lifted(d) = coeff.g_D(space.dof_coords[d]);
        if (!std::isfinite(lifted(d))) throw DataError("non-finite Dirichlet datum at DOF " + std::to_string(d));
      }
  sys.rhs = sys.load;
  relift(sys, lifted);
  return sys;
}

}  // namespace

void set_assembly_threads(int threads) { g_threads = std::max(1, threads); }
int assembly_threads() { return g_threads; }

CoefficientField CoefficientField::laplacian() {
  CoefficientField c;
  c.A = [](const Point&) { return Eigen::Matrix2d::Identity().eval(); };
  return c;
}

FeFunction AssembledSystem::expand(const Eigen::VectorXd& free_values) const {
  Eigen::VectorXd full = lifted;
  for (int i = 0; i < subspace.free_count(); ++i) full(subspace.free_dofs[i]) = free_values(i);
  return FeFunction(subspace.space, std::move(full));
}

Eigen::VectorXd AssembledSystem::restrict_free(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(subspace.free_count());
  for (int i = 0; i < subspace.free_count(); ++i) out(i) = full(subspace.free_dofs[i]);
  return out;
}

Eigen::VectorXd AssembledSystem::restrict_constrained(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(subspace.constrained_count());
  for (int i = 0; i < subspace.constrained_count(); ++i) out(i) = full(subspace.constrained_dofs[i]);
  return out;
}

Eigen::VectorXd AssembledSystem::residual(const FeFunction& u) const {
  return matrix * restrict_free(u.coefficients) + coupling * restrict_constrained(u.coefficients) - load;
}

AssembledSystem assemble_operator(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                                  const QuadratureRule& quad) {
  return assemble_impl(subspace, coeff, quad, false);
}

AssembledSystem assemble(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                         const QuadratureRule& quad) {
  return assemble_impl(subspace, coeff, quad, true);
}

Eigen::VectorXd assemble_rhs(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                             const QuadratureRule& quad) {
  return assemble(subspace, coeff, quad).rhs;
}

void relift(AssembledSystem& system, const Eigen::VectorXd& values) {
  const ConstrainedSubspace& sub = system.subspace;
  if (values.size() != sub.space->dof_count()) throw ConfigError("relift: value vector has wrong length");
  system.lifted = Eigen::VectorXd::Zero(values.size());
  for (int d : sub.constrained_dofs) system.lifted(d) = values(d);
  system.rhs = system.load - system.coupling * system.restrict_constrained(system.lifted);
}

Eigen::VectorXd form_against_basis(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                                   const ElementField& target, const QuadratureRule& quad) {
  const FeSpace& space = *subspace.space;
  const int ne = space.mesh->element_count();
  const int n = space.local_dof_count();
  const BasisTable table(space.basis(), quad);
  std::vector<LocalVector> local(ne);
  parallel_elements(ne, [&](int e) {
    bool any_free = false;
    for (int d : space.element_dofs(e)) any_free = any_free || subspace.free_index[d] >= 0;
    if (!any_free) return;
    const TriangleVertices v = space.mesh->element_vertices(e);
    const Eigen::Matrix<double, 2, 3> g = barycentric_gradients(v);
    const double jac = 2.0 * signed_area(v);
    LocalVector acc = LocalVector::Zero(n);
    for (int q = 0; q < quad.size(); ++q) {
      const Eigen::Vector3d lambda = quad.points.row(q).transpose();
      const Point x = v * lambda;
      const double w = quad.weights(q) * jac;
      const FieldSample t = target(e, lambda, x, 1);
      const Eigen::Vector2d flux = coeff.A(x) * t.gradient;
      double reaction = coeff.c ? coeff.c(x) * t.value : 0.0;
      if (coeff.b) reaction += coeff.b(x).dot(t.gradient);
      acc.noalias() += w * (table.gradients[q] * (g.transpose() * flux) + reaction * table.values[q]);
    }
    if (!acc.allFinite()) throw DataError("non-finite projection load" + element_context(e));
    local[e] = std::move(acc);
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(subspace.free_count());
  for (int e = 0; e < ne; ++e) {
    if (local[e].size() == 0) continue;
    const auto dofs = space.element_dofs(e);
    for (int i = 0; i < n; ++i)
      if (const int row = subspace.free_index[dofs[i]]; row >= 0) out(row) += local[e](i);
  }
  return out;
}

AssembledSystem assemble_gram(const ConstrainedSubspace& subspace, GramKind kind,
                              const std::optional<std::vector<int>>& elements) {
  const FeSpace& space = *subspace.space;
  const QuadratureRule& quad = quadrature_rule(2 * space.degree);
  const BasisTable table(space.basis(), quad);
  const int ne = space.mesh->element_count();
  const int n = space.local_dof_count();
  std::vector<char> include(ne, elements ? 0 : 1);
  if (elements)
    for (int e : *elements) include.at(e) = 1;
  std::vector<LocalMatrix> local(ne);
  parallel_elements(ne, [&](int e) {
    if (!include[e]) return;
    const TriangleVertices v = space.mesh->element_vertices(e);
    const Eigen::Matrix<double, 2, 3> g = barycentric_gradients(v);
    const double jac = 2.0 * signed_area(v);
    LocalMatrix m = LocalMatrix::Zero(n, n);
    Eigen::Matrix<double, Eigen::Dynamic, 2, 0, kMaxLocalDofs, 2> grads(n, 2);
    for (int q = 0; q < quad.size(); ++q) {
      const double w = quad.weights(q) * jac;
      if (kind != GramKind::H1Semi) m.noalias() += w * (table.values[q] * table.values[q].transpose());
      if (kind != GramKind::Mass) {
        grads.noalias() = table.gradients[q] * g.transpose();
        m.noalias() += w * (grads * grads.transpose());
      }
    }
    local[e] = std::move(m);
  });
  AssembledSystem sys;
  sys.subspace = subspace;
  scatter(subspace, local, sys);
  sys.load = Eigen::VectorXd::Zero(subspace.free_count());
  sys.lifted = Eigen::VectorXd::Zero(space.dof_count());
  sys.rhs = sys.load;
  sys.symmetric = true;
  sys.min_eigenvalue_A = kind == GramKind::Mass ? 0.0 : 1.0;
  return sys;
}

void for_each_quadrature_point(
    const Mesh& mesh, const std::optional<std::vector<int>>& elements, const QuadratureRule& quad,
    const std::vector<Point>& singular_points,
    const std::function<void(int, const Eigen::Vector3d&, const Point&, double)>& visit) {
  constexpr int kSubdivisionLevels = 4;
  auto integrate_piece = [&](int e, const TriangleVertices& v, const Eigen::Matrix3d& corners, double jac) {
    for (int q = 0; q < quad.size(); ++q) {
      const Eigen::Vector3d lambda = corners * quad.points.row(q).transpose();
      visit(e, lambda, v * lambda, quad.weights(q) * jac);
    }
  };
  auto visit_element = [&](int e) {
    const TriangleVertices v = mesh.element_vertices(e);
    const double jac = 2.0 * signed_area(v);
    int singular = -1;
    if (!singular_points.empty()) {
      const double tol = 1e-12 * diameter(v);
      for (int i = 0; i < 3 && singular < 0; ++i)
        for (const Point& p : singular_points)
          if ((v.col(i) - p).norm() <= tol) {
            singular = i;
            break;
          }
    }
    if (singular < 0) {
      integrate_piece(e, v, Eigen::Matrix3d::Identity(), jac);
      return;
    }
    // Corners as barycentric columns, singular corner first.
    Eigen::Matrix3d corners;
    for (int i = 0; i < 3; ++i) corners.col(i) = Eigen::Matrix3d::Identity().col((singular + i) % 3);
    double piece_jac = jac;
    for (int level = 0; level < kSubdivisionLevels; ++level) {
      const Eigen::Vector3d m01 = 0.5 * (corners.col(0) + corners.col(1));
      const Eigen::Vector3d m12 = 0.5 * (corners.col(1) + corners.col(2));
      const Eigen::Vector3d m20 = 0.5 * (corners.col(2) + corners.col(0));
      piece_jac *= 0.25;
      Eigen::Matrix3d child;
      child << m01, corners.col(1), m12;
      integrate_piece(e, v, child, piece_jac);
      child << m20, m12, corners.col(2);
      integrate_piece(e, v, child, piece_jac);
      child << m01, m12, m20;
      integrate_piece(e, v, child, piece_jac);
      corners.col(1) = m01;
      corners.col(2) = m20;
    }
    integrate_piece(e, v, corners, piece_jac);
  };
  if (elements) {
    for (int e : *elements) visit_element(e);
  } else {
    for (int e = 0; e < mesh.element_count(); ++e) visit_element(e);
  }
}

double field_norm(const Mesh& mesh, const ElementField& field, const NormRequest& request, int quadrature_degree) {
  if (request.elements && request.elements->empty()) throw UndefinedError("norm requested over an empty element set");
  const NormKind kind = request.kind;
  if (kind == NormKind::WInf0 || kind == NormKind::WInf1 || kind == NormKind::WInf2) {
    const int order = kind == NormKind::WInf0 ? 0 : (kind == NormKind::WInf1 ? 1 : 2);
    const LagrangeBasis& lattice = lagrange_basis(4);  // 15 sample points per element
    double best = 0.0;
    auto visit = [&](int e) {
      const TriangleVertices v = mesh.element_vertices(e);
      for (int i = 0; i < lattice.size(); ++i) {
        const Eigen::Vector3d lambda = lattice.node(i);
        const FieldSample s = field(e, lambda, v * lambda, order);
        const double mag = order == 0 ? std::abs(s.value) : (order == 1 ? s.gradient.norm() : s.hessian.norm());
        best = std::max(best, mag);
      }
    };
    if (request.elements)
      for (int e : *request.elements) visit(e);
    else
      for (int e = 0; e < mesh.element_count(); ++e) visit(e);
    return best;
  }
  const int order = kind == NormKind::L2 ? 0 : 1;
  double sum = 0.0;
  for_each_quadrature_point(mesh, request.elements, quadrature_rule(quadrature_degree), request.singular_points,
                            [&](int e, const Eigen::Vector3d& lambda, const Point& x, double w) {
                              const FieldSample s = field(e, lambda, x, order);
                              if (kind != NormKind::H1Semi) sum += w * s.value * s.value;
                              if (kind != NormKind::L2) sum += w * s.gradient.squaredNorm();
                            });
  return std::sqrt(sum);
}

double norm(const FeFunction& u, const NormRequest& request) {
  const int degree = request.quadrature_degree > 0 ? request.quadrature_degree : 2 * u.space->degree + 6;
  return field_norm(*u.space->mesh, u.field(), request, degree);
}

double error_norm(const ExactFunction& exact, const FeFunction& u, const NormRequest& request) {
  const int degree = request.quadrature_degree > 0 ? request.quadrature_degree : 2 * u.space->degree + 6;
  return field_norm(*u.space->mesh, difference(as_field(exact), u.field()), request, degree);
}

void write_coordinate_format(std::ostream& out, const SparseMatrix& matrix) {
  char buf[96];
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      out << buf;
    }
}

}  // namespace femlocal
