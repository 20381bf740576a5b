#pragma once

#include "femlocal/problems.hpp"
#include "femlocal/solve.hpp"
#include "femlocal/verify.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace femlocal {

enum class MeshSchedule { Uniform, Graded };

/// How the mesh of each level is produced from the previous one.
///
/// Uniform: `rounds_per_level` bisection rounds per level (2 rounds halve h).
/// Graded: grading toward `grade_point` with h_min * h_min_factor^level, and, when
/// subdomain_h_fraction > 0, extra bisection until h_T <= fraction * d * subdomain_h_factor^level
/// on the elements touching G.
struct MeshPlan {
  MeshSchedule type = MeshSchedule::Uniform;
  int initial_rounds = 2;
  int rounds_per_level = 2;
  double theta = 0.25;
  double h_min = 0.05;
  double h_min_factor = 0.5;
  std::optional<Point> grade_point;  // default: first singular point, else the subdomain center
  double subdomain_h_fraction = 0.0;
  double subdomain_h_factor = 0.5;
};

struct ExperimentConfig {
  std::string problem;
  int degree = 1;
  int levels = 4;
  MeshPlan mesh;
  LinearSolveSpec solver;
  std::vector<Inequality> checks;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<Point> center;  // overrides the problem's subdomain
  std::optional<double> d;
  int superapprox_samples = 20;
  std::string output_dir;

  /// levels >= 2, checks nonempty, numeric ranges; ConfigError otherwise.
  void validate() const;
};

/// JSON config; unknown fields and wrong types are ConfigErrors.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig read_config_file(const std::string& path);

/// NaN marks a missing value (undefined EOC, failed check, no exact solution).
struct TableRow {
  int level = 0;
  long dofs = 0;
  double h_max = 0.0;
  double h_min = 0.0;
  double quasi_uniformity_ratio = 0.0;
  double global_H1_error = 0.0;
  double local_H1_error = 0.0;
  double pollution_term = 0.0;
  std::vector<std::pair<std::string, double>> effective_constants;  // in config check order
  std::vector<std::pair<std::string, std::string>> failures;        // check id -> reason
  double eoc_global_H1 = 0.0;
  double eoc_local_H1 = 0.0;
  double eoc_pollution = 0.0;
};

struct ConvergenceTable {
  std::string problem;
  int degree = 1;
  bool graded = false;
  std::vector<std::string> checks;
  std::vector<TableRow> rows;

  /// log(e_{i-1}/e_i) / log(x_{i-1}/x_i) with x = h_max (uniform) or dofs^{-1/2} (graded).
  void compute_eoc();
};

struct ExperimentResult {
  ConvergenceTable table;
  std::vector<EstimateReport> reports;
  int checks_attempted = 0;
  int checks_failed = 0;
};

/// One mesh per level, then assemble, solve, measure and run the requested checks.
/// A failed check precondition is recorded in the row; solver failures propagate.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The mesh of every level of a plan, starting from the problem's initial mesh.
std::vector<Mesh> build_level_meshes(const ProblemCase& problem, const MeshPlan& plan, int levels, const Point& center,
                                     double d);

enum class OutputFormat { Csv, Json };
OutputFormat format_from_name(std::string_view name);

/// Fixed column order; floats at 12 significant digits, missing values empty.
std::string table_csv(const ConvergenceTable& table);
/// Table plus reports; floats rounded to 12 significant digits, missing values null.
std::string results_json(const ConvergenceTable& table, const std::vector<EstimateReport>& reports);
std::string report_json(const EstimateReport& report);
std::pair<ConvergenceTable, std::vector<EstimateReport>> parse_results_json(std::string_view text);

/// Writes table.csv or results.json into `directory` (created if needed); IoError on failure.
void emit(const ConvergenceTable& table, const std::vector<EstimateReport>& reports, OutputFormat format,
          const std::string& directory);

}  // namespace femlocal
