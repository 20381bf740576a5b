#pragma once

#include "femlocal/field.hpp"
#include "femlocal/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace femlocal {

inline constexpr int kMaxDegree = 4;
inline constexpr int kMaxLocalDofs = (kMaxDegree + 1) * (kMaxDegree + 2) / 2;

/// Per-element vectors with a fixed upper bound on their size, kept on the stack.
using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocalDofs, 1>;
using LocalGradients = Eigen::Matrix<double, Eigen::Dynamic, 3, 0, kMaxLocalDofs, 3>;
using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocalDofs, kMaxLocalDofs>;

/// Lagrange shape functions of degree k on the equispaced barycentric lattice.
///
/// Local node order: the three vertices, then the k-1 nodes of each edge i
/// (opposite vertex i, running from vertex i+1 toward vertex i+2), then the
/// interior nodes in lexicographic multi-index order.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(lattice_.size()); }
  const std::array<int, 3>& multi_index(int i) const { return lattice_[i]; }
  Eigen::Vector3d node(int i) const;

  LocalVector values(const Eigen::Vector3d& lambda) const;
  /// d phi_i / d lambda_m, one row per shape function.
  LocalGradients barycentric_gradients(const Eigen::Vector3d& lambda) const;
  /// Second barycentric derivatives of shape function i.
  Eigen::Matrix3d barycentric_hessian(int i, const Eigen::Vector3d& lambda) const;

 private:
  int degree_;
  std::vector<std::array<int, 3>> lattice_;
};

/// Shared instance for 1 <= degree <= 4.
const LagrangeBasis& lagrange_basis(int degree);

enum class DofClass : std::uint8_t { Interior, Dirichlet, Neumann };

/// Continuous piecewise polynomials of degree k on a mesh. In the notation of
/// the local-estimate theory this is S_h^r with r = k + 1.
struct FeSpace {
  std::shared_ptr<const Mesh> mesh;
  int degree = 1;
  std::vector<Point> dof_coords;
  std::vector<int> element_dof_table;  // element-major, local_dof_count() per element
  std::vector<DofClass> dof_class;
  /// Elements containing each DOF (CSR layout).
  std::vector<int> dof_element_offsets;
  std::vector<int> dof_elements;

  int dof_count() const { return static_cast<int>(dof_coords.size()); }
  int local_dof_count() const { return (degree + 1) * (degree + 2) / 2; }
  std::span<const int> element_dofs(int e) const {
    return {element_dof_table.data() + static_cast<std::size_t>(e) * local_dof_count(),
            static_cast<std::size_t>(local_dof_count())};
  }
  std::span<const int> elements_of_dof(int dof) const {
    return {dof_elements.data() + dof_element_offsets[dof],
            static_cast<std::size_t>(dof_element_offsets[dof + 1] - dof_element_offsets[dof])};
  }
  const LagrangeBasis& basis() const { return lagrange_basis(degree); }
};

using SpacePtr = std::shared_ptr<const FeSpace>;

/// Global numbering is lexicographic in the node coordinates (x, then y).
SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree);

struct FeFunction {
  SpacePtr space;
  Eigen::VectorXd coefficients;

  FeFunction() = default;
  explicit FeFunction(SpacePtr s) : space(std::move(s)), coefficients(Eigen::VectorXd::Zero(space->dof_count())) {}
  FeFunction(SpacePtr s, Eigen::VectorXd c);

  /// Value and derivatives on element e at barycentric coordinates lambda.
  FieldSample sample(int e, const Eigen::Vector3d& lambda, int order) const;
  /// Point evaluation by element search; throws DataError outside the mesh.
  double operator()(const Point& x) const;
  ElementField field() const;
};

FeFunction interpolate(SpacePtr space, const std::function<double(const Point&)>& f);
/// Interpolation of a finite element function; identity on its own space.
FeFunction interpolate(SpacePtr space, const FeFunction& u);

/// DOFs left free after masking: S_{D,0} on the whole domain, or S_{D,0} restricted
/// to functions supported on the touching elements of a ball.
struct ConstrainedSubspace {
  SpacePtr space;
  std::vector<int> free_dofs;         // ascending
  std::vector<int> constrained_dofs;  // ascending, complement of free_dofs
  std::vector<int> free_index;        // per DOF: position in free_dofs or -1
  std::vector<int> constrained_index; // per DOF: position in constrained_dofs or -1
  std::optional<BallSubdomain> ball;
  bool zero_dirichlet = true;
  std::string description;

  int free_count() const { return static_cast<int>(free_dofs.size()); }
  int constrained_count() const { return static_cast<int>(constrained_dofs.size()); }
};

ConstrainedSubspace constrained_subspace(SpacePtr space, std::optional<BallSubdomain> ball, bool zero_dirichlet);

/// h_T |u|_{H^1(T)} / ||u||_{L_2(T)}.
double inverse_ratio(const FeFunction& u, int element);

/// Plain-text dump: DOF count, then one coefficient per line at 17 significant digits.
void write_function(std::ostream& out, const FeFunction& u);
Eigen::VectorXd read_function_coefficients(std::istream& in);

}  // namespace femlocal
