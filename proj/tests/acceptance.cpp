// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Pass --verbose to print the per-level measurements behind each verdict.

#include "femlocal/errors.hpp"
#include "femlocal/experiment.hpp"
#include "femlocal/problems.hpp"
#include "femlocal/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace femlocal;

namespace {

bool verbose = false;

void note(const char* format, auto... args) {
  if (!verbose) return;
  std::printf("    ");
  std::printf(format, args...);
  std::printf("\n");
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double spread(const std::vector<double>& values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi / *lo;
}

std::shared_ptr<const Mesh> shared(Mesh mesh) { return std::make_shared<const Mesh>(std::move(mesh)); }

bool touches(const Mesh& mesh, int e, const Point& center, double radius) {
  return distance_to_triangle(mesh.element_vertices(e), center) <= radius;
}

// Bisects until h_T <= target on every element meeting the ball.
Mesh refine_near(const Mesh& mesh, const Point& center, double radius, double target) {
  return refine_while(mesh, [&](const Mesh& m, int e) {
    return m.element_diameter(e) > target && touches(m, e, center, radius);
  });
}

FeFunction random_function(const SpacePtr& space, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeFunction u(space);
  for (int i = 0; i < space->dof_count(); ++i) u.coefficients(i) = dist(gen);
  return u;
}

// Monomials up to total degree k are reproduced at random points of every element.
Verdict polynomial_reproduction() {
  std::vector<std::shared_ptr<const Mesh>> meshes = {
      shared(refine_uniformly(generate_initial_mesh(DomainSpec::unit_square()), 6)),
      shared(grade_toward(generate_initial_mesh(DomainSpec::lshape()), Point(0, 0), 0.3, 0.005)),
      shared(grade_toward(generate_initial_mesh(DomainSpec::unit_square()), Point(0.3, 0.7), 0.3, 0.002)),
  };
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (const auto& mesh : meshes)
    for (int k = 1; k <= 3; ++k) {
      const SpacePtr space = build_space(mesh, k);
      for (int a = 0; a <= k; ++a)
        for (int b = 0; a + b <= k; ++b) {
          const auto mono = [a, b](const Point& x) { return std::pow(x.x(), a) * std::pow(x.y(), b); };
          const FeFunction u = interpolate(space, mono);
          for (int e = 0; e < mesh->element_count(); ++e) {
            double l1 = unit(gen), l2 = unit(gen);
            if (l1 + l2 > 1.0) l1 = 1.0 - l1, l2 = 1.0 - l2;
            const Eigen::Vector3d lambda(1.0 - l1 - l2, l1, l2);
            const auto v = mesh->element_vertices(e);
            const Point x = lambda(0) * v.col(0) + lambda(1) * v.col(1) + lambda(2) * v.col(2);
            // |x|, |y| <= 1 on both domains, so every monomial is bounded by 1.
            worst = std::max(worst, std::abs(u.sample(e, lambda, 0).value - mono(x)));
          }
        }
    }
  return {worst <= 1e-12, fmt("max error %.2e over k=1..3, uniform and graded meshes", worst)};
}

// Direct solves satisfy the discrete equations on every benchmark.
Verdict galerkin_orthogonality() {
  double worst = 0.0;
  for (const ProblemCase& p : builtin_problems())
    for (int k = 1; k <= 3; ++k) {
      const auto mesh = shared(grade_toward(refine_uniformly(generate_initial_mesh(p.domain), 4),
                                            p.singular_points.empty() ? p.subdomain.center : p.singular_points[0],
                                            0.3, 0.01));
      const SpacePtr space = build_space(mesh, k);
      const AssembledSystem sys =
          assemble(constrained_subspace(space, std::nullopt, true), p.coefficients, quadrature_rule(2 * k + 2));
      const FeFunction u = solve_global(sys);
      const double r = relative_residual(sys, u);
      note("%s k=%d dofs=%d residual %.2e", p.id.c_str(), k, space->dof_count(), r);
      worst = std::max(worst, r);
    }
  return {worst <= 1e-10, fmt("max relative residual %.2e over 4 benchmarks, k=1..3", worst)};
}

Verdict global_convergence() {
  bool pass = true;
  std::string detail;
  for (int k : {1, 2}) {
    ExperimentConfig c;
    c.problem = "SMOOTH_SQUARE";
    c.degree = k;
    c.levels = 4;
    c.mesh.initial_rounds = 4;
    c.checks = {Inequality::Poincare};
    const ExperimentResult r = run_experiment(c);
    const double lo = k == 1 ? 0.9 : 1.85, hi = k == 1 ? 1.1 : 2.15;
    detail += fmt("k=%d EOC", k);
    for (std::size_t i = 1; i < r.table.rows.size(); ++i) {
      const double eoc = r.table.rows[i].eoc_global_H1;
      pass = pass && eoc >= lo && eoc <= hi;
      detail += fmt(" %.3f", eoc);
    }
    detail += k == 1 ? "; " : "";
  }
  return {pass, detail};
}

// Fixed cutoff on the L-shape; each level halves h_T on the superapproximation scope.
Verdict improved_superapproximation() {
  const Point center(-0.5, 0.5);
  const double r_in = 0.1, r_out = 0.4, d = r_out - r_in;
  bool pass = true;
  std::string detail;
  for (int k : {1, 2}) {
    const Cutoff w = build_cutoff(center, r_in, r_out, k + 1);
    Mesh mesh = grade_toward(generate_initial_mesh(DomainSpec::lshape()), Point(0, 0), 0.25, 0.02);
    std::vector<double> constants, ratios;
    for (int level = 0; level < 4; ++level) {
      mesh = refine_near(mesh, center, r_out + d, d * std::ldexp(0.5, -level));
      if (level > 0) mesh = grade_toward(mesh, Point(0, 0), 0.25, 0.02 * std::ldexp(1.0, -level));
      const auto m = shared(mesh);
      const SpacePtr space = build_space(m, k);
      const BallSubdomain scope = ball_subdomain(*m, center, r_out + d);
      double h = 0.0;
      for (int e : scope.touching_elements) h = std::max(h, m->element_diameter(e));
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 20; ++seed)
        worst = std::max(worst, superapprox_check(random_function(space, seed), w).improved.effective_constant);
      note("k=%d level=%d h/d=%.4f dofs=%d C=%.4f", k, level, h / d, space->dof_count(), worst);
      constants.push_back(worst);
      ratios.push_back(h / d);
    }
    const double shrink = ratios.front() / ratios.back();
    pass = pass && spread(constants) < 3.0 && shrink >= 8.0;
    detail += fmt("k=%d spread %.3f (h/d shrinks %.1fx)%s", k, spread(constants), shrink, k == 1 ? "; " : "");
  }
  return {pass, detail};
}

// chi lives where omega vanishes: omega*chi is zero there, chi is not.
Verdict support_separation() {
  const Cutoff w = build_cutoff(Point(0.5, 0.5), 0.1, 0.25, 3);
  const auto mesh = shared(refine_uniformly(generate_initial_mesh(DomainSpec::unit_square()), 8));
  const SpacePtr space = build_space(mesh, 2);
  std::vector<int> outside;
  for (int e = 0; e < mesh->element_count(); ++e)
    if (distance_to_triangle(mesh->element_vertices(e), w.center()) > w.r_out()) outside.push_back(e);
  const FeFunction noise = random_function(space, 42);
  FeFunction chi(space);
  for (int e : outside)
    for (int dof : space->element_dofs(e)) chi.coefficients(dof) = noise.coefficients(dof);
  const SuperapproxResult r = superapprox_check(chi, w, outside);
  int improved_nonzero = 0, classical_nonzero = 0;
  for (const ElementEstimate& e : r.improved.elements) improved_nonzero += e.rhs[0] != 0.0;
  for (const ElementEstimate& e : r.classical.elements) classical_nonzero += e.rhs[0] != 0.0;
  return {improved_nonzero == 0 && classical_nonzero > 0,
          fmt("%zu elements with omega = 0: improved gradient term nonzero on %d, classical on %d", outside.size(),
              improved_nonzero, classical_nonzero)};
}

Verdict caccioppoli() {
  const Point center(0.5, 0.5);
  const double d = 0.25;
  bool pass = true;
  std::string detail;
  for (const char* id : {"SMOOTH_SQUARE", "VARIABLE_COEFF"}) {
    const ProblemCase p = find_problem(id);
    MeshPlan plan;
    plan.type = MeshSchedule::Graded;
    plan.initial_rounds = 2;
    plan.grade_point = center;
    plan.theta = 0.3;
    plan.h_min = 0.02;
    plan.subdomain_h_fraction = 0.25;
    const std::vector<Mesh> meshes = build_level_meshes(p, plan, 4, center, d);
    std::vector<double> constants;
    for (const Mesh& level_mesh : meshes) {
      const auto mesh = shared(level_mesh);
      const SpacePtr space = build_space(mesh, 1);
      const BallSubdomain g = ball_subdomain(*mesh, center, d), g0 = ball_subdomain(*mesh, center, d / 4);
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const FeFunction u = discrete_harmonic(space, g, seed, p.coefficients);
        worst = std::max(worst, caccioppoli_check(u, p.coefficients, g0, g, d).effective_constant);
      }
      note("%s level=%d dofs=%d h/d=%.4f C=%.4f", id, level_mesh.level, space->dof_count(),
           check_mesh_condition(*mesh, g, d, 0.25).max_ratio, worst);
      constants.push_back(worst);
    }
    pass = pass && spread(constants) < 3.0;
    detail += fmt("%s spread %.3f%s", p.id == "SMOOTH_SQUARE" ? "Laplacian" : id, spread(constants),
                  p.id == "SMOOTH_SQUARE" ? "; " : "");
  }
  return {pass, detail};
}

ExperimentConfig pollution_graded() {
  ExperimentConfig c;
  c.problem = "POLLUTION_CASE";
  c.degree = 1;
  c.levels = 4;
  c.mesh.type = MeshSchedule::Graded;
  c.mesh.initial_rounds = 2;
  c.mesh.theta = 0.25;
  c.mesh.h_min = 0.002;
  c.mesh.h_min_factor = 0.5;
  c.mesh.subdomain_h_fraction = 1.0 / 16.0;
  c.mesh.subdomain_h_factor = 0.75;
  c.checks = {Inequality::LocalError, Inequality::Coercivity};
  c.seed = 3;
  return c;
}

Verdict local_error() {
  const ExperimentResult r = run_experiment(pollution_graded());
  std::vector<double> constants;
  double min_quasi = 1e300;
  for (const TableRow& row : r.table.rows) {
    note("level=%d dofs=%ld q=%.1f local=%.4e pollution=%.4e C=%.4f%s", row.level, row.dofs,
         row.quasi_uniformity_ratio, row.local_H1_error, row.pollution_term, row.effective_constants[0].second,
         row.failures.empty() ? "" : (" failure: " + row.failures[0].second).c_str());
    if (!row.failures.empty()) return {false, "level " + std::to_string(row.level) + ": " + row.failures[0].second};
    constants.push_back(row.effective_constants[0].second);
    min_quasi = std::min(min_quasi, row.quasi_uniformity_ratio);
  }
  return {spread(constants) < 3.0 && min_quasi >= 100.0,
          fmt("spread %.3f, min quasi-uniformity ratio %.0f, mesh condition 1/16 held on all levels",
              spread(constants), min_quasi)};
}

Verdict pollution() {
  ExperimentConfig c;
  c.problem = "POLLUTION_CASE";
  c.degree = 1;
  c.levels = 4;
  c.mesh.initial_rounds = 6;
  c.checks = {Inequality::Poincare};
  const ExperimentResult r = run_experiment(c);
  for (const TableRow& row : r.table.rows)
    note("level=%d dofs=%ld local=%.4e pollution=%.4e eoc_local=%.3f eoc_pollution=%.3f", row.level, row.dofs,
         row.local_H1_error, row.pollution_term, row.eoc_local_H1, row.eoc_pollution);
  const TableRow& last = r.table.rows.back();
  const double gap = last.eoc_pollution - last.eoc_local_H1;
  return {gap >= 0.3, fmt("final EOC pollution %.3f, local H1 %.3f, gap %.3f", last.eoc_pollution,
                          last.eoc_local_H1, gap)};
}

Verdict coercivity_poincare() {
  const auto mesh = shared(refine_uniformly(generate_initial_mesh(DomainSpec::unit_square()), 12));
  const SpacePtr space = build_space(mesh, 1);
  CoefficientField coeff = CoefficientField::laplacian();
  coeff.c = [](const Point&) { return 1.0; };
  const EstimateReport co = coercivity_check(ball_subdomain(*mesh, Point(0.5, 0.5), 0.2), coeff, space);
  std::vector<double> constants;
  std::string radii;
  for (double rho : {0.05, 0.1, 0.2, 0.4}) {
    const EstimateReport r = poincare_check(ball_subdomain(*mesh, Point(0.5, 0.5), rho), space);
    constants.push_back(r.effective_constant);
    radii += fmt(" %.3f", r.effective_constant);
  }
  return {co.effective_constant <= 1.0 + 1e-6 && spread(constants) < 4.0,
          fmt("C1 = %.9f; Poincare constants%s (spread %.3f)", co.effective_constant, radii.c_str(),
              spread(constants))};
}

Verdict determinism() {
  ExperimentConfig c = pollution_graded();
  c.levels = 2;
  c.checks = {Inequality::LocalError, Inequality::Caccioppoli, Inequality::Superapprox22, Inequality::Poincare};
  c.superapprox_samples = 3;
  const ExperimentResult a = run_experiment(c), b = run_experiment(c);
  const bool csv = table_csv(a.table) == table_csv(b.table);
  const bool json = results_json(a.table, a.reports) == results_json(b.table, b.reports);
  return {csv && json, fmt("CSV %s, JSON %s", csv ? "identical" : "differs", json ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) verbose = verbose || std::strcmp(argv[i], "--verbose") == 0;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"polynomial reproduction", polynomial_reproduction},
      {"Galerkin orthogonality", galerkin_orthogonality},
      {"global convergence", global_convergence},
      {"improved superapproximation", improved_superapproximation},
      {"support separation", support_separation},
      {"Caccioppoli", caccioppoli},
      {"local error estimate", local_error},
      {"pollution behavior", pollution},
      {"coercivity and Poincare", coercivity_poincare},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%-4s %2zu %-28s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
