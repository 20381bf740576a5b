#include "femlocal/experiment.hpp"

#include "femlocal/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace femlocal {

namespace {

using nlohmann::json;

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : object.items())
    if (!allowed.contains(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

Point read_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be a pair [x, y]");
  return Point(j[0].get<double>(), j[1].get<double>());
}

template <class T>
void read_if(const json& object, const char* key, T& target) {
  if (object.contains(key)) target = object.at(key).get<T>();
}

MeshPlan parse_mesh_plan(const json& j) {
  reject_unknown(j,
                 {"type", "initial_rounds", "rounds_per_level", "theta", "h_min", "h_min_factor", "grade_point",
                  "subdomain_h_fraction", "subdomain_h_factor"},
                 "mesh");
  MeshPlan plan;
  if (j.contains("type")) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "uniform")
      plan.type = MeshSchedule::Uniform;
    else if (type == "graded")
      plan.type = MeshSchedule::Graded;
    else
      throw ConfigError("mesh.type must be 'uniform' or 'graded'");
  }
  read_if(j, "initial_rounds", plan.initial_rounds);
  read_if(j, "rounds_per_level", plan.rounds_per_level);
  read_if(j, "theta", plan.theta);
  read_if(j, "h_min", plan.h_min);
  read_if(j, "h_min_factor", plan.h_min_factor);
  if (j.contains("grade_point")) plan.grade_point = read_point(j.at("grade_point"), "mesh.grade_point");
  read_if(j, "subdomain_h_fraction", plan.subdomain_h_fraction);
  read_if(j, "subdomain_h_factor", plan.subdomain_h_factor);
  return plan;
}

LinearSolveSpec parse_solver(const json& j) {
  reject_unknown(j, {"method", "rel_tolerance", "max_iterations"}, "solver");
  LinearSolveSpec spec;
  if (j.contains("method")) {
    const std::string m = j.at("method").get<std::string>();
    if (m == "DIRECT")
      spec.method = SolveMethod::Direct;
    else if (m == "CG_JACOBI")
      spec.method = SolveMethod::CgJacobi;
    else
      throw ConfigError("solver.method must be DIRECT or CG_JACOBI");
  }
  read_if(j, "rel_tolerance", spec.rel_tolerance);
  read_if(j, "max_iterations", spec.max_iterations);
  return spec;
}

bool touches_ball(const Mesh& mesh, int e, const Point& center, double radius) {
  const TriangleVertices v = mesh.element_vertices(e);
  return distance_to_triangle(v, center) <= radius + 1e-12 * diameter(v);
}

double rate(double e0, double e1, double x0, double x1) {
  if (!(e0 > 0.0) || !(e1 > 0.0) || !std::isfinite(e0) || !std::isfinite(e1) || x0 == x1) return kMissing;
  return std::log(e0 / e1) / std::log(x0 / x1);
}

}  // namespace

void ExperimentConfig::validate() const {
  (void)find_problem(problem);
  if (degree < 1 || degree > kMaxDegree) throw ConfigError("degree must lie in 1..4");
  if (levels < 2) throw ConfigError("levels must be at least 2");
  if (checks.empty()) throw ConfigError("checks must name at least one inequality");
  if (threads < 1) throw ConfigError("threads must be positive");
  if (superapprox_samples < 1) throw ConfigError("superapprox_samples must be positive");
  if (d && !(*d > 0.0)) throw ConfigError("subdomain d must be positive");
  if (mesh.initial_rounds < 0 || mesh.rounds_per_level < 1) throw ConfigError("mesh rounds out of range");
  if (!(mesh.theta > 0.0 && mesh.theta <= 1.0)) throw ConfigError("mesh.theta must lie in (0, 1]");
  if (!(mesh.h_min > 0.0)) throw ConfigError("mesh.h_min must be positive");
  if (!(mesh.h_min_factor > 0.0 && mesh.h_min_factor <= 1.0)) throw ConfigError("mesh.h_min_factor must lie in (0, 1]");
  if (!(mesh.subdomain_h_fraction >= 0.0)) throw ConfigError("mesh.subdomain_h_fraction must be >= 0");
  if (!(mesh.subdomain_h_factor > 0.0 && mesh.subdomain_h_factor <= 1.0))
    throw ConfigError("mesh.subdomain_h_factor must lie in (0, 1]");
  solver.validate();
}

ExperimentConfig parse_config(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    reject_unknown(j,
                   {"problem", "degree", "levels", "mesh", "solver", "checks", "seed", "threads", "subdomain",
                    "superapprox_samples", "output_dir"},
                   "config");
    for (const char* key : {"problem", "degree", "levels", "checks"})
      if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
    ExperimentConfig c;
    c.problem = j.at("problem").get<std::string>();
    c.degree = j.at("degree").get<int>();
    c.levels = j.at("levels").get<int>();
    if (j.contains("mesh")) c.mesh = parse_mesh_plan(j.at("mesh"));
    if (j.contains("solver")) c.solver = parse_solver(j.at("solver"));
    for (const auto& id : j.at("checks")) c.checks.push_back(inequality_from_id(id.get<std::string>()));
    read_if(j, "seed", c.seed);
    read_if(j, "threads", c.threads);
    if (j.contains("subdomain")) {
      const json& s = j.at("subdomain");
      reject_unknown(s, {"center", "d"}, "subdomain");
      if (s.contains("center")) c.center = read_point(s.at("center"), "subdomain.center");
      if (s.contains("d")) c.d = s.at("d").get<double>();
    }
    read_if(j, "superapprox_samples", c.superapprox_samples);
    read_if(j, "output_dir", c.output_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void ConvergenceTable::compute_eoc() {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TableRow& r = rows[i];
    if (i == 0) {
      r.eoc_global_H1 = r.eoc_local_H1 = r.eoc_pollution = kMissing;
      continue;
    }
    const TableRow& p = rows[i - 1];
    const double x0 = graded ? 1.0 / std::sqrt(double(p.dofs)) : p.h_max;
    const double x1 = graded ? 1.0 / std::sqrt(double(r.dofs)) : r.h_max;
    r.eoc_global_H1 = rate(p.global_H1_error, r.global_H1_error, x0, x1);
    r.eoc_local_H1 = rate(p.local_H1_error, r.local_H1_error, x0, x1);
    r.eoc_pollution = rate(p.pollution_term, r.pollution_term, x0, x1);
  }
}

std::vector<Mesh> build_level_meshes(const ProblemCase& problem, const MeshPlan& plan, int levels, const Point& center,
                                     double d) {
  std::vector<Mesh> meshes;
  Mesh mesh = refine_uniformly(generate_initial_mesh(problem.domain), plan.initial_rounds);
  const Point grade_point =
      plan.grade_point ? *plan.grade_point : (problem.singular_points.empty() ? center : problem.singular_points[0]);
  for (int level = 0; level < levels; ++level) {
    if (plan.type == MeshSchedule::Uniform) {
      if (level > 0) mesh = refine_uniformly(mesh, plan.rounds_per_level);
    } else {
      mesh = grade_toward(mesh, grade_point, plan.theta, plan.h_min * std::pow(plan.h_min_factor, level));
      if (plan.subdomain_h_fraction > 0.0) {
        const double target = plan.subdomain_h_fraction * d * std::pow(plan.subdomain_h_factor, level);
        mesh = refine_while(mesh, [&](const Mesh& m, int e) {
          return m.element_diameter(e) > target && touches_ball(m, e, center, d);
        });
      }
    }
    mesh.level = level;
    meshes.push_back(mesh);
  }
  return meshes;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  set_assembly_threads(config.threads);
  const ProblemCase problem = find_problem(config.problem);
  const Point center = config.center ? *config.center : problem.subdomain.center;
  const double d = config.d ? *config.d : problem.subdomain.d;
  const CoefficientField& coeff = problem.coefficients;

  ExperimentResult result;
  ConvergenceTable& table = result.table;
  table.problem = problem.id;
  table.degree = config.degree;
  table.graded = config.mesh.type == MeshSchedule::Graded;
  for (Inequality q : config.checks) table.checks.emplace_back(inequality_id(q));

  const std::vector<Mesh> meshes = build_level_meshes(problem, config.mesh, config.levels, center, d);
  for (const Mesh& level_mesh : meshes) {
    const auto mesh = std::make_shared<const Mesh>(level_mesh);
    const SpacePtr space = build_space(mesh, config.degree);
    const ShapeReport shape = shape_report(*mesh);
    const BallSubdomain g = ball_subdomain(*mesh, center, d);
    const BallSubdomain g0_local = ball_subdomain(*mesh, center, d / 2.0);

    const ConstrainedSubspace sub = constrained_subspace(space, std::nullopt, true);
    const AssembledSystem sys = assemble(sub, coeff, quadrature_rule(2 * config.degree + 2));
    const FeFunction u_h = solve_global(sys, config.solver);

    TableRow row;
    row.level = mesh->level;
    row.dofs = space->dof_count();
    row.h_max = shape.h_max;
    row.h_min = shape.h_min;
    row.quasi_uniformity_ratio = shape.quasi_uniformity_ratio;
    row.global_H1_error = row.local_H1_error = row.pollution_term = kMissing;
    if (problem.exact) {
      const std::vector<Point>& sing = problem.singular_points;
      row.global_H1_error = error_norm(*problem.exact, u_h, {NormKind::H1, std::nullopt, sing});
      if (!g0_local.inner_elements.empty())
        row.local_H1_error = error_norm(*problem.exact, u_h, {NormKind::H1, g0_local.inner_elements, sing});
      if (!g.touching_elements.empty())
        row.pollution_term = error_norm(*problem.exact, u_h, {NormKind::L2, g.touching_elements, sing}) / d;
    }

    for (Inequality which : config.checks) {
      const std::string id(inequality_id(which));
      ++result.checks_attempted;
      try {
        EstimateReport report;
        switch (which) {
          case Inequality::Superapprox22:
          case Inequality::Superapprox21: {
            const Cutoff cutoff = build_cutoff(center, d / 2.0, 1.5 * d, config.degree + 1);
            bool first = true;
            for (int s = 0; s < config.superapprox_samples; ++s) {
              const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
              const SuperapproxResult r = superapprox_check(random_outer_values(space, seed), cutoff);
              EstimateReport candidate = which == Inequality::Superapprox22 ? r.improved : r.classical;
              candidate.seed = seed;
              if (first || candidate.effective_constant > report.effective_constant) report = std::move(candidate);
              first = false;
            }
            report.elements.clear();
            break;
          }
          case Inequality::Caccioppoli: {
            const FeFunction harmonic = discrete_harmonic(space, g, config.seed, coeff, config.solver);
            report = caccioppoli_check(harmonic, coeff, ball_subdomain(*mesh, center, d / 4.0), g, d);
            report.seed = config.seed;
            break;
          }
          case Inequality::LocalError:
            if (!problem.exact) throw UndefinedError("problem has no exact solution");
            report = local_error_check(*problem.exact, u_h, coeff, g0_local, g, d, {problem.singular_points, 10});
            break;
          case Inequality::Coercivity:
            report = coercivity_check(g, coeff, space);
            report.d = d;
            break;
          case Inequality::Poincare:
            report = poincare_check(g, space);
            report.d = d;
            break;
        }
        report.level = mesh->level;
        row.effective_constants.emplace_back(id, report.effective_constant);
        result.reports.push_back(std::move(report));
      } catch (const PreconditionError& e) {
        row.effective_constants.emplace_back(id, kMissing);
        row.failures.emplace_back(id, e.what());
        ++result.checks_failed;
      } catch (const UndefinedError& e) {
        row.effective_constants.emplace_back(id, kMissing);
        row.failures.emplace_back(id, e.what());
        ++result.checks_failed;
      } catch (const LocalCoercivityError& e) {
        row.effective_constants.emplace_back(id, kMissing);
        row.failures.emplace_back(id, e.what());
        ++result.checks_failed;
      }
    }
    table.rows.push_back(std::move(row));
  }
  table.compute_eoc();
  return result;
}

}  // namespace femlocal
