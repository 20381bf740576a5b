#include "femlocal/cutoff.hpp"
#include "femlocal/errors.hpp"
#include "femlocal/solve.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace femlocal;
using std::numbers::pi;

namespace {

std::shared_ptr<const Mesh> square_mesh(int rounds, DomainSpec domain = DomainSpec::unit_square()) {
  return std::make_shared<const Mesh>(refine_uniformly(generate_initial_mesh(domain), rounds));
}

AssembledSystem poisson(const SpacePtr& space, const CoefficientField& coeff) {
  return assemble(constrained_subspace(space, std::nullopt, true), coeff, quadrature_rule(2 * space->degree + 2));
}

CoefficientField sine_problem() {
  CoefficientField c = CoefficientField::laplacian();
  c.f = [](const Point& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  return c;
}

FeFunction random_function(const SpacePtr& space, std::uint64_t seed, const std::vector<int>& dofs) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeFunction u(space);
  for (int d : dofs) u.coefficients(d) = dist(gen);
  return u;
}

NormRequest over(NormKind kind, std::optional<std::vector<int>> elements = std::nullopt) {
  return {kind, std::move(elements), {}};
}

}  // namespace

TEST_CASE("solver spec validation") {
  LinearSolveSpec s;
  CHECK_NOTHROW(s.validate());
  s.rel_tolerance = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.rel_tolerance = 1e-3;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.max_iterations = -1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("global solves") {
  const SpacePtr space = build_space(square_mesh(4), 2);
  const FeFunction zero = solve_global(poisson(space, CoefficientField::laplacian()));
  CHECK(zero.coefficients.cwiseAbs().maxCoeff() == 0.0);

  for (int k = 1; k <= 3; ++k) {
    const SpacePtr sk = build_space(square_mesh(3), k);
    CoefficientField affine = CoefficientField::laplacian();
    affine.g_D = [](const Point& x) { return x.x() + x.y(); };
    const FeFunction u = solve_global(poisson(sk, affine));
    for (int d = 0; d < sk->dof_count(); ++d)
      CHECK(std::abs(u.coefficients(d) - sk->dof_coords[d].sum()) <= 1e-9);
  }
}

TEST_CASE("direct and CG solutions agree") {
  const SpacePtr space = build_space(square_mesh(6), 1);
  const AssembledSystem sys = poisson(space, sine_problem());
  LinearSolveSpec cg;
  cg.method = SolveMethod::CgJacobi;
  cg.rel_tolerance = 1e-12;
  SolveLog log;
  const FeFunction a = solve_global(sys);
  const FeFunction b = solve_global(sys, cg, &log);
  const FeFunction diff(space, a.coefficients - b.coefficients);
  CHECK(norm(diff, over(NormKind::H1)) <= 1e-8);
  CHECK(log.residual_history.size() > 2);
  CHECK(log.final_residual == log.residual_history.back());

  std::ostringstream csv;
  write_residual_history_csv(csv, log);
  CHECK(csv.str().rfind("iteration,residual\n0,", 0) == 0);

  // The sine load is nearly a discrete eigenvector, so a generic load is used to force failure.
  CoefficientField ramp = CoefficientField::laplacian();
  ramp.f = [](const Point& x) { return x.x(); };
  cg.max_iterations = 2;
  try {
    solve_global(poisson(space, ramp), cg);
    FAIL("expected non-convergence");
  } catch (const IterativeFailure& e) {
    CHECK(e.residual_history().size() == 3);
  }

  CoefficientField convective = sine_problem();
  convective.b = [](const Point&) { return Eigen::Vector2d(1.0, 0.0); };
  cg.max_iterations = 0;
  CHECK_THROWS_AS(solve_global(poisson(space, convective), cg), ConfigError);
  CHECK_NOTHROW(solve_global(poisson(space, convective)));
}

TEST_CASE("singular systems are reported") {
  using enum BoundaryTag;
  const SpacePtr space = build_space(square_mesh(3, DomainSpec::unit_square({Neumann, Neumann, Neumann, Neumann})), 1);
  CoefficientField c = CoefficientField::laplacian();
  c.f = [](const Point& x) { return x.x(); };
  CHECK_THROWS_AS(solve_global(poisson(space, c)), SingularSystemError);
}

TEST_CASE("local projection") {
  const SpacePtr space = build_space(square_mesh(6), 2);
  const Mesh& mesh = *space->mesh;
  const BallSubdomain g = ball_subdomain(mesh, Point(0.5, 0.5), 0.25);
  const CoefficientField lap = CoefficientField::laplacian();
  const ElementField zero = [](int, const Eigen::Vector3d&, const Point&, int) { return FieldSample{}; };
  CHECK(local_projection(space, zero, g, lap).coefficients.cwiseAbs().maxCoeff() == 0.0);

  // Members of the ball subspace are reproduced, and projection is idempotent.
  const ConstrainedSubspace sub = constrained_subspace(space, g, true);
  const FeFunction v = random_function(space, 9, sub.free_dofs);
  const FeFunction pv = local_projection(space, v.field(), g, lap);
  CHECK((pv.coefficients - v.coefficients).cwiseAbs().maxCoeff() <= 1e-9);

  const Cutoff omega = build_cutoff(Point(0.5, 0.5), 0.1, 0.2, 3);
  const ExactFunction u{[](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
                        [](const Point& x) {
                          return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                                                 pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
                        },
                        {}};
  const ElementField target = product(omega.field(), as_field(u));
  const FeFunction p = local_projection(space, target, g, lap);
  const FeFunction pp = local_projection(space, p.field(), g, lap);
  CHECK((pp.coefficients - p.coefficients).cwiseAbs().maxCoeff() <= 1e-9);

  // Orthogonality against every free test function.
  const AssembledSystem k = assemble_operator(sub, lap, quadrature_rule(6));
  const Eigen::VectorXd lhs = k.matrix * k.restrict_free(p.coefficients) + k.coupling * k.restrict_constrained(p.coefficients);
  const Eigen::VectorXd rhs = form_against_basis(sub, lap, target, quadrature_rule(10));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));

  for (int e = 0; e < mesh.element_count(); ++e)
    if (!g.is_touching[e])
      for (int d : space->element_dofs(e)) CHECK(p.coefficients(d) == 0.0);
}

TEST_CASE("local projection is stable under refinement") {
  const Cutoff omega = build_cutoff(Point(0.5, 0.5), 0.1, 0.2, 3);
  const ExactFunction u{[](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
                        [](const Point& x) {
                          return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                                                 pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
                        },
                        {}};
  const ElementField target = product(omega.field(), as_field(u));
  for (int level = 0; level < 4; ++level) {
    const SpacePtr space = build_space(square_mesh(4 + level), 1);
    const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), 0.25);
    const FeFunction p = local_projection(space, target, g, CoefficientField::laplacian());
    const double ratio = norm(p, over(NormKind::H1, g.touching_elements)) /
                         field_norm(*space->mesh, target, over(NormKind::H1, g.touching_elements), 8);
    CHECK(ratio <= 10.0);
  }
}

TEST_CASE("local coercivity failure") {
  const SpacePtr space = build_space(square_mesh(5), 1);
  const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), 0.45);
  CoefficientField c = CoefficientField::laplacian();
  c.c = [](const Point&) { return -100.0; };
  CHECK_THROWS_AS(discrete_harmonic(space, g, 1, c), LocalCoercivityError);
}

TEST_CASE("discrete harmonic functions") {
  const SpacePtr space = build_space(square_mesh(5), 2);
  const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), 0.3);
  const CoefficientField lap = CoefficientField::laplacian();
  CHECK(discrete_harmonic(space, g, FeFunction(space), lap).coefficients.cwiseAbs().maxCoeff() == 0.0);

  const FeFunction x = interpolate(space, [](const Point& p) { return p.x(); });
  const FeFunction h = discrete_harmonic(space, g, x, lap);
  CHECK((h.coefficients - x.coefficients).cwiseAbs().maxCoeff() <= 1e-9);

  const FeFunction a = discrete_harmonic(space, g, 42, lap);
  const FeFunction b = discrete_harmonic(space, g, 42, lap);
  CHECK(a.coefficients == b.coefficients);
  const ConstrainedSubspace sub = constrained_subspace(space, g, true);
  const FeFunction outer = random_outer_values(space, 42);
  for (int d : sub.constrained_dofs) CHECK(a.coefficients(d) == outer.coefficients(d));

  const FeFunction v1 = random_outer_values(space, 1), v2 = random_outer_values(space, 2);
  const FeFunction combo(space, 2.0 * v1.coefficients - 0.5 * v2.coefficients);
  const Eigen::VectorXd lin = 2.0 * discrete_harmonic(space, g, v1, lap).coefficients -
                              0.5 * discrete_harmonic(space, g, v2, lap).coefficients;
  CHECK((discrete_harmonic(space, g, combo, lap).coefficients - lin).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("Rayleigh quotients") {
  const SpacePtr space = build_space(square_mesh(5), 1);
  const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), 0.3);
  const ConstrainedSubspace sub = constrained_subspace(space, g, true);
  const AssembledSystem h1 = assemble_gram(sub, GramKind::H1);
  const AssembledSystem mass = assemble_gram(sub, GramKind::Mass);

  const RayleighResult same = min_rayleigh(h1, h1);
  CHECK(same.value == doctest::Approx(1.0).epsilon(1e-12));

  const RayleighResult r = min_rayleigh(h1, mass);
  CHECK(r.converged);
  const Eigen::VectorXd x = h1.restrict_free(r.vector.coefficients);
  CHECK(x.dot(h1.matrix * x) / x.dot(mass.matrix * x) == doctest::Approx(r.value).epsilon(1e-8));
  // The support reaches past radius 0.3 by up to h ~ 0.18, so the quotient lies between
  // 1 + (2.405/0.48)^2 ~ 26 and 1 + (2.405/0.3)^2 ~ 65 plus discretization error.
  CHECK(r.value > 26.0);
  CHECK(r.value < 75.0);

  AssembledSystem h1_scaled = h1, mass_scaled = mass;
  h1_scaled.matrix *= 7.0;
  mass_scaled.matrix *= 7.0;
  CHECK(min_rayleigh(h1_scaled, mass_scaled).value == doctest::Approx(r.value).epsilon(1e-8));

  // A positive-definite stiffness with Dirichlet constraints has a positive minimum.
  const AssembledSystem k =
      assemble_operator(constrained_subspace(space, std::nullopt, true), CoefficientField::laplacian(), quadrature_rule(4));
  const AssembledSystem gram = assemble_gram(constrained_subspace(space, std::nullopt, true), GramKind::H1);
  CHECK(min_rayleigh(k, gram).value > 0.0);

  using enum BoundaryTag;
  const SpacePtr neumann = build_space(square_mesh(3, DomainSpec::unit_square({Neumann, Neumann, Neumann, Neumann})), 1);
  const ConstrainedSubspace all = constrained_subspace(neumann, std::nullopt, true);
  CHECK_THROWS_AS(min_rayleigh(assemble_gram(all, GramKind::H1), assemble_gram(all, GramKind::H1Semi)), ConfigError);
  CHECK_THROWS_AS(min_rayleigh(h1, assemble_gram(all, GramKind::H1)), ConfigError);
}

TEST_CASE("Rayleigh minima shrink as the subspace grows") {
  const SpacePtr space = build_space(square_mesh(6), 1);
  double previous = std::numeric_limits<double>::infinity();
  for (double radius : {0.1, 0.2, 0.4}) {
    const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), radius);
    const ConstrainedSubspace sub = constrained_subspace(space, g, true);
    const double v = min_rayleigh(assemble_gram(sub, GramKind::H1), assemble_gram(sub, GramKind::Mass)).value;
    CHECK(v <= previous);
    previous = v;
  }
}

TEST_CASE("discrete Poincare constant scales with the radius") {
  const SpacePtr space = build_space(square_mesh(8), 1);
  std::vector<double> scaled;
  for (double radius : {0.1, 0.2, 0.4}) {
    const BallSubdomain g = ball_subdomain(*space->mesh, Point(0.5, 0.5), radius);
    const ConstrainedSubspace sub = constrained_subspace(space, g, true);
    const double v = min_rayleigh(assemble_gram(sub, GramKind::H1), assemble_gram(sub, GramKind::Mass)).value;
    scaled.push_back(1.0 / (v * radius * radius));  // max |u|_0^2 / |u|_1^2, divided by rho^2
  }
  CHECK(*std::max_element(scaled.begin(), scaled.end()) < 4.0 * *std::min_element(scaled.begin(), scaled.end()));
}
