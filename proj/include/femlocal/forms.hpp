#pragma once

#include "femlocal/field.hpp"
#include "femlocal/quadrature.hpp"
#include "femlocal/space.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace femlocal {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Data of  -div(A grad u) + b . grad u + c u = f,  u = g_D on Gamma_D,  conormal data on Gamma_N.
///
/// The Neumann datum enters the load with a minus sign,
///     L(u, v) = int f v dx - int_{Gamma_N} g_N v ds,
/// so a manufactured solution u needs g_N = -(A grad u) . n for the discrete problem to be
/// consistent. This departs from the usual "+ int g_N v" convention on purpose.
struct CoefficientField {
  std::function<Eigen::Matrix2d(const Point&)> A;
  std::function<Eigen::Vector2d(const Point&)> b;  // empty: b = 0
  std::function<double(const Point&)> c;           // empty: c = 0
  std::function<double(const Point&)> f;           // empty: f = 0
  std::function<double(const Point&, const Eigen::Vector2d& normal)> g_N;  // empty: 0
  std::function<double(const Point&)> g_D;         // empty: 0

  bool has_convection() const { return static_cast<bool>(b); }

  /// A = I, everything else zero.
  static CoefficientField laplacian();
};

/// Bilinear form restricted to the free DOFs of a constrained subspace, with the
/// constrained DOFs carrying prescribed ("lifted") values.
struct AssembledSystem {
  ConstrainedSubspace subspace;
  SparseMatrix matrix;    // free x free, entries L(phi_j, phi_i)
  SparseMatrix coupling;  // free x constrained
  Eigen::VectorXd load;   // free DOFs: int f phi_i - int_{Gamma_N} g_N phi_i (or a custom load)
  Eigen::VectorXd lifted; // full length; constrained entries hold the prescribed values
  Eigen::VectorXd rhs;    // load - coupling * lifted_constrained
  bool symmetric = true;  // true when b = 0
  double min_eigenvalue_A = 0.0;

  /// Full-space function from free-DOF values plus the lifted constrained values.
  FeFunction expand(const Eigen::VectorXd& free_values) const;
  Eigen::VectorXd restrict_free(const Eigen::VectorXd& full) const;
  Eigen::VectorXd restrict_constrained(const Eigen::VectorXd& full) const;
  /// free-DOF residual  matrix * u_free + coupling * u_constrained - load.
  Eigen::VectorXd residual(const FeFunction& u) const;
};

/// Matrix part only: zero load and zero lifting. Requires quad exactness >= 2k.
AssembledSystem assemble_operator(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                                  const QuadratureRule& quad);

/// Matrix, load with Neumann terms, and Dirichlet lifting by nodal interpolation of g_D
/// (constrained DOFs that are not Dirichlet DOFs are lifted with 0).
AssembledSystem assemble(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                         const QuadratureRule& quad);

/// Load vector over the free DOFs, including Neumann terms and Dirichlet lifting corrections.
Eigen::VectorXd assemble_rhs(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                             const QuadratureRule& quad);

/// Replaces the prescribed constrained values (taken from `values` at the constrained DOFs)
/// and recomputes the right-hand side.
void relift(AssembledSystem& system, const Eigen::VectorXd& values);

/// Load vector L(target, phi_i) over the free DOFs for a target field with derivatives.
Eigen::VectorXd form_against_basis(const ConstrainedSubspace& subspace, const CoefficientField& coeff,
                                   const ElementField& target, const QuadratureRule& quad);

enum class GramKind { Mass, H1Semi, H1 };

/// Gram matrix of the L2, H1-seminorm or full H1 inner product on the free DOFs,
/// restricted to the elements in `elements` (all elements when empty optional).
AssembledSystem assemble_gram(const ConstrainedSubspace& subspace, GramKind kind,
                              const std::optional<std::vector<int>>& elements = std::nullopt);

enum class NormKind { L2, H1Semi, H1, WInf0, WInf1, WInf2 };

struct NormRequest {
  NormKind kind = NormKind::L2;
  std::optional<std::vector<int>> elements;  // nullopt: every element
  /// Elements incident to these vertices are integrated on 4 levels of dyadic
  /// subdivision toward the vertex.
  std::vector<Point> singular_points;
  /// Quadrature degree; 0 picks 2k + 6.
  int quadrature_degree = 0;
};

double norm(const FeFunction& u, const NormRequest& request);
/// Norm of exact - u_h.
double error_norm(const ExactFunction& exact, const FeFunction& u, const NormRequest& request);
/// Norm of an arbitrary element-wise field on a mesh.
double field_norm(const Mesh& mesh, const ElementField& field, const NormRequest& request, int quadrature_degree);

/// Calls visit(element, lambda, x, weight) for every quadrature point over the element set,
/// with subdivided integration near singular points.
void for_each_quadrature_point(
    const Mesh& mesh, const std::optional<std::vector<int>>& elements, const QuadratureRule& quad,
    const std::vector<Point>& singular_points,
    const std::function<void(int, const Eigen::Vector3d&, const Point&, double)>& visit);

/// Coordinate-format triples "row col value", one per line.
void write_coordinate_format(std::ostream& out, const SparseMatrix& matrix);

/// Number of worker threads used by element loops (results are independent of it).
void set_assembly_threads(int threads);
int assembly_threads();

}  // namespace femlocal
