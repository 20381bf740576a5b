#include "femlocal/solve.hpp"

#include "femlocal/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <random>

namespace femlocal {

namespace {

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

struct Inertia {
  int negative = 0;
  int zero = 0;
  bool factored = false;
};

Inertia inertia_of(const Ldlt& ldlt) {
  Inertia in;
  in.factored = ldlt.info() == Eigen::Success;
  if (!in.factored) return in;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (std::abs(d(i)) <= 1e-14 * scale || !std::isfinite(d(i)))
      ++in.zero;
    else if (d(i) < 0.0)
      ++in.negative;
  }
  return in;
}

SparseMatrix symmetric_part(const SparseMatrix& a) {
  SparseMatrix at = a.transpose();
  return SparseMatrix(0.5 * (a + at));
}

Eigen::VectorXd cg_jacobi(const SparseMatrix& a, const Eigen::VectorXd& b, double tol, int max_iterations,
                          SolveLog* log) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    if (!(d > 0.0)) throw SolverError("CG_JACOBI needs a positive diagonal");
    inv_diag(i) = 1.0 / d;
  }
  const double target = tol * (1.0 + b.cwiseAbs().maxCoeff());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  std::vector<double> history{r.cwiseAbs().maxCoeff()};
  for (int it = 0; it < max_iterations && history.back() > target; ++it) {
    const Eigen::VectorXd ap = a * p;
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw IterativeFailure("CG breakdown: matrix not positive definite", history);
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    history.push_back(r.cwiseAbs().maxCoeff());
  }
  if (log) {
    log->residual_history = history;
    log->final_residual = history.back();
  }
  if (history.back() > target)
    throw IterativeFailure("CG did not converge in " + std::to_string(max_iterations) + " iterations", history);
  return x;
}

/// Refuses indefinite local forms: the symmetric part must factor with positive pivots.
void require_local_coercivity(const AssembledSystem& sys, const BallSubdomain& ball) {
  if (sys.matrix.rows() == 0) return;
  Ldlt ldlt(sys.symmetric ? sys.matrix : symmetric_part(sys.matrix));
  const Inertia in = inertia_of(ldlt);
  if (!in.factored || in.negative > 0 || in.zero > 0) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "bilinear form is not coercive on the ball of radius %.6g; choose a smaller d", ball.radius);
    throw LocalCoercivityError(buf);
  }
}

FeFunction checked_solve(const AssembledSystem& sys, const LinearSolveSpec& spec, double tolerance) {
  const FeFunction u = sys.expand(solve_free(sys, spec));
  const double r = relative_residual(sys, u);
  if (!(r <= tolerance)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "solver residual %.3e exceeds tolerance %.1e", r, tolerance);
    throw SingularSystemError(buf);
  }
  return u;
}

/// Nodal value of a field at a DOF, taken from one element containing it.
double nodal_value(const FeSpace& space, const ElementField& field, int dof) {
  const int e = space.elements_of_dof(dof)[0];
  const auto dofs = space.element_dofs(e);
  int local = 0;
  while (dofs[local] != dof) ++local;
  const Eigen::Vector3d lambda = space.basis().node(local);
  return field(e, lambda, space.mesh->element_vertices(e) * lambda, 0).value;
}

}  // namespace

void LinearSolveSpec::validate() const {
  if (!(rel_tolerance > 0.0 && rel_tolerance <= 1e-4)) throw ConfigError("rel_tolerance must lie in (0, 1e-4]");
  if (max_iterations < 0) throw ConfigError("max_iterations must be positive");
}

Eigen::VectorXd solve_free(const AssembledSystem& system, const LinearSolveSpec& spec, SolveLog* log) {
  spec.validate();
  const Eigen::Index n = system.matrix.rows();
  if (log) *log = SolveLog{};
  if (n == 0) return Eigen::VectorXd(0);
  if (spec.method == SolveMethod::CgJacobi) {
    if (!system.symmetric) throw ConfigError("CG_JACOBI requires a symmetric system (b = 0); use DIRECT");
    const int max_it =
        spec.max_iterations > 0 ? spec.max_iterations : static_cast<int>(20.0 * std::sqrt(double(n)) + 200.0);
    return cg_jacobi(system.matrix, system.rhs, spec.rel_tolerance, max_it, log);
  }
  if (system.symmetric) {
    Ldlt ldlt(system.matrix);
    const Inertia in = inertia_of(ldlt);
    if (in.factored && in.zero == 0) return ldlt.solve(system.rhs);
  }
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  SparseMatrix a = system.matrix;
  a.makeCompressed();
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw SingularSystemError("sparse factorization failed: " + lu.lastErrorMessage());
  return lu.solve(system.rhs);
}

double relative_residual(const AssembledSystem& system, const FeFunction& u) {
  if (system.matrix.rows() == 0) return 0.0;
  const double scale = 1.0 + (system.rhs.size() ? system.rhs.cwiseAbs().maxCoeff() : 0.0);
  return system.residual(u).cwiseAbs().maxCoeff() / scale;
}

FeFunction solve_global(const AssembledSystem& system, const LinearSolveSpec& spec, SolveLog* log) {
  const FeFunction u = system.expand(solve_free(system, spec, log));
  const double r = relative_residual(system, u);
  if (!(r <= spec.rel_tolerance)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "free-DOF residual %.3e exceeds tolerance %.1e", r, spec.rel_tolerance);
    if (spec.method == SolveMethod::CgJacobi)
      throw IterativeFailure(buf, log ? log->residual_history : std::vector<double>{});
    throw SingularSystemError(buf);
  }
  return u;
}

FeFunction local_projection(SpacePtr space, const ElementField& target, const BallSubdomain& ball,
                            const CoefficientField& coeff, const std::optional<FeFunction>& dirichlet_values,
                            const LinearSolveSpec& spec) {
  const int k = space->degree;
  const ConstrainedSubspace sub = constrained_subspace(space, ball, true);
  AssembledSystem sys = assemble_operator(sub, coeff, quadrature_rule(2 * k + 2));
  require_local_coercivity(sys, ball);
  sys.load = form_against_basis(sub, coeff, target, quadrature_rule(2 * k + 6));

  Eigen::VectorXd values = Eigen::VectorXd::Zero(space->dof_count());
  for (int d : sub.constrained_dofs) {
    bool inside = true;
    for (int e : space->elements_of_dof(d)) inside = inside && ball.is_touching[e];
    if (!inside) continue;  // support boundary or outside: zero
    values(d) = dirichlet_values ? dirichlet_values->coefficients(d) : nodal_value(*space, target, d);
  }
  relift(sys, values);
  return checked_solve(sys, spec, 1e-10);
}

FeFunction discrete_harmonic(SpacePtr space, const BallSubdomain& ball, const FeFunction& outer_values,
                             const CoefficientField& coeff, const LinearSolveSpec& spec) {
  if (outer_values.space != space) throw ConfigError("discrete_harmonic: outer values live on another space");
  const ConstrainedSubspace sub = constrained_subspace(space, ball, true);
  AssembledSystem sys = assemble_operator(sub, coeff, quadrature_rule(2 * space->degree + 2));
  require_local_coercivity(sys, ball);
  relift(sys, outer_values.coefficients);
  return checked_solve(sys, spec, 1e-10);
}

FeFunction random_outer_values(SpacePtr space, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::VectorXd c(space->dof_count());
  for (int i = 0; i < space->dof_count(); ++i) {
    // 53 random bits mapped to [-1, 1); drawn for every DOF so the stream is layout independent.
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    c(i) = space->dof_class[i] == DofClass::Dirichlet ? 0.0 : 2.0 * u - 1.0;
  }
  return FeFunction(std::move(space), std::move(c));
}

FeFunction discrete_harmonic(SpacePtr space, const BallSubdomain& ball, std::uint64_t seed,
                             const CoefficientField& coeff, const LinearSolveSpec& spec) {
  const FeFunction outer = random_outer_values(space, seed);
  return discrete_harmonic(std::move(space), ball, outer, coeff, spec);
}

RayleighResult min_rayleigh(const AssembledSystem& stiffness, const AssembledSystem& gram) {
  if (stiffness.subspace.free_dofs != gram.subspace.free_dofs || stiffness.subspace.space != gram.subspace.space)
    throw ConfigError("min_rayleigh: systems live on different subspaces");
  const Eigen::Index n = stiffness.matrix.rows();
  if (n == 0) throw ConfigError("min_rayleigh: empty subspace");
  const SparseMatrix k = stiffness.symmetric ? stiffness.matrix : symmetric_part(stiffness.matrix);
  const SparseMatrix& m = gram.matrix;
  {
    Ldlt check(m);
    const Inertia in = inertia_of(check);
    if (!in.factored || in.negative > 0 || in.zero > 0) throw ConfigError("min_rayleigh: gram matrix is not SPD");
  }

  auto factor = [&](double shift, Ldlt& ldlt) {
    ldlt.compute(SparseMatrix(k - shift * m));
    const Inertia in = inertia_of(ldlt);
    return in.factored && in.negative == 0 && in.zero == 0;
  };

  // Find a shift below the smallest eigenvalue of the pencil.
  double shift = 0.0;
  auto ldlt = std::make_unique<Ldlt>();
  int attempts = 0;
  while (!factor(shift, *ldlt)) {
    shift = shift == 0.0 ? -1.0 : 2.0 * shift;
    if (++attempts > 80) throw SolverError("min_rayleigh: no positive definite shift found");
  }

  auto quotient = [&](const Eigen::VectorXd& x) { return x.dot(k * x) / x.dot(m * x); };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  x /= std::sqrt(x.dot(m * x));
  double rho = quotient(x);
  RayleighResult result;
  for (int it = 1; it <= 200; ++it) {
    Eigen::VectorXd y = ldlt->solve(m * x);
    x = y / std::sqrt(y.dot(m * y));
    const double next = quotient(x);
    result.iterations = it;
    const bool done = std::abs(next - rho) <= 1e-9 * std::abs(next);
    rho = next;
    if (done) {
      result.converged = true;
      break;
    }
    if (it % 3 == 0 && rho > shift) {
      // Move the shift toward the current quotient while keeping K - shift M positive definite.
      double candidate = shift + 0.9 * (rho - shift);
      auto trial = std::make_unique<Ldlt>();
      bool accepted = false;
      for (int backoff = 0; backoff < 30 && !accepted; ++backoff) {
        accepted = factor(candidate, *trial);
        if (!accepted) candidate = shift + 0.5 * (candidate - shift);
      }
      if (accepted) {
        shift = candidate;
        ldlt = std::move(trial);
      }
    }
  }
  result.value = rho;
  result.vector = stiffness.expand(x);
  result.vector.coefficients = Eigen::VectorXd::Zero(stiffness.subspace.space->dof_count());
  for (int i = 0; i < stiffness.subspace.free_count(); ++i)
    result.vector.coefficients(stiffness.subspace.free_dofs[i]) = x(i);
  return result;
}

void write_residual_history_csv(std::ostream& out, const SolveLog& log) {
  char buf[64];
  out << "iteration,residual\n";
  for (std::size_t i = 0; i < log.residual_history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, log.residual_history[i]);
    out << buf;
  }
}

}  // namespace femlocal
