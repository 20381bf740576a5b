#pragma once

#include "femlocal/forms.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace femlocal {

enum class SolveMethod { Direct, CgJacobi };

struct LinearSolveSpec {
  SolveMethod method = SolveMethod::Direct;
  double rel_tolerance = 1e-10;
  /// 0 selects 20 sqrt(n) + 200.
  int max_iterations = 0;

  void validate() const;
};

/// Residual history of the last iterative solve (empty for direct solves).
struct SolveLog {
  std::vector<double> residual_history;
  double final_residual = 0.0;
};

/// Galerkin solution on the free DOFs; constrained DOFs carry the lifted values.
/// The free-DOF residual is re-verified against rel_tolerance * (1 + |rhs|_inf).
FeFunction solve_global(const AssembledSystem& system, const LinearSolveSpec& spec = {}, SolveLog* log = nullptr);

/// Free-DOF solution of matrix x = rhs with the given method; no residual re-check.
Eigen::VectorXd solve_free(const AssembledSystem& system, const LinearSolveSpec& spec, SolveLog* log = nullptr);

/// |residual|_inf / (1 + |load|_inf) of u against the system's defining relation.
double relative_residual(const AssembledSystem& system, const FeFunction& u);

/// Local projection P(target) in S_D supported on the touching elements of `ball`:
///   L(target - P, v) = 0  for all v in the ball-constrained subspace.
/// Dirichlet DOFs inside the support take their values from `dirichlet_values`
/// (for instance u_h) when given, otherwise from the nodal values of the target.
FeFunction local_projection(SpacePtr space, const ElementField& target, const BallSubdomain& ball,
                            const CoefficientField& coeff, const std::optional<FeFunction>& dirichlet_values = std::nullopt,
                            const LinearSolveSpec& spec = {});

/// Discrete harmonic function: prescribed values on every DOF that is not free in the
/// ball-constrained subspace, and L(u_h, v) = 0 for every free test function.
FeFunction discrete_harmonic(SpacePtr space, const BallSubdomain& ball, const FeFunction& outer_values,
                             const CoefficientField& coeff, const LinearSolveSpec& spec = {});

/// Seeded outer values: uniform in [-1, 1] on non-Dirichlet DOFs, zero on Dirichlet DOFs.
FeFunction random_outer_values(SpacePtr space, std::uint64_t seed);

FeFunction discrete_harmonic(SpacePtr space, const BallSubdomain& ball, std::uint64_t seed,
                             const CoefficientField& coeff, const LinearSolveSpec& spec = {});

struct RayleighResult {
  double value = 0.0;
  FeFunction vector;
  int iterations = 0;
  bool converged = false;
};

/// min over the shared free DOFs of u^T K u / u^T M u (K symmetrized), by shifted inverse
/// iteration with inertia-checked shifts. At most 200 iterations; converged when the
/// quotient changes by <= 1e-9 relative.
RayleighResult min_rayleigh(const AssembledSystem& stiffness, const AssembledSystem& gram);

void write_residual_history_csv(std::ostream& out, const SolveLog& log);

}  // namespace femlocal
