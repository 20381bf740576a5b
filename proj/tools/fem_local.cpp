// fem-local: convergence studies and local estimate checks for P_k Lagrange elements.
//
// Exit codes: 0 success, 2 configuration error, 3 every requested check failed its
// preconditions, 4 solver failure, 1 anything else.

#include "femlocal/errors.hpp"
#include "femlocal/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace femlocal;

int run(const std::string& config_path, const std::string& out_dir, std::optional<int> threads,
        std::optional<std::uint64_t> seed) {
  ExperimentConfig config = read_config_file(config_path);
  if (threads) config.threads = *threads;
  if (seed) config.seed = *seed;
  config.validate();
  const std::string dir = out_dir.empty() ? (config.output_dir.empty() ? "." : config.output_dir) : out_dir;

  const ExperimentResult result = run_experiment(config);
  emit(result.table, result.reports, OutputFormat::Csv, dir);
  emit(result.table, result.reports, OutputFormat::Json, dir);
  std::cout << table_csv(result.table);
  for (const TableRow& row : result.table.rows)
    for (const auto& [id, why] : row.failures) std::cerr << "level " << row.level << " " << id << ": " << why << "\n";
  if (result.checks_attempted > 0 && result.checks_failed == result.checks_attempted) return 3;
  return 0;
}

int table(const std::string& in_dir, const std::string& format) {
  const OutputFormat f = format_from_name(format);
  const std::filesystem::path path = std::filesystem::path(in_dir) / "results.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto [t, reports] = parse_results_json(buf.str());
  std::cout << (f == OutputFormat::Csv ? table_csv(t) : results_json(t, reports));
  return 0;
}

int mesh(const std::string& problem_id, int levels, const std::string& dump) {
  if (levels < 0) throw ConfigError("levels must be >= 0");
  const ProblemCase problem = find_problem(problem_id);
  const std::vector<Mesh> meshes =
      build_level_meshes(problem, MeshPlan{}, levels + 1, problem.subdomain.center, problem.subdomain.d);
  const Mesh& m = meshes.back();
  write_mesh_file(dump, m);
  const ShapeReport s = shape_report(m);
  std::printf("vertices %d elements %d h_max %.6g h_min %.6g min_shape_ratio %.6g\n", m.vertex_count(),
              m.element_count(), s.h_max, s.h_min, s.min_shape_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local finite element error estimates: experiments and tables"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
  run_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--threads", threads, "assembly threads");
  run_cmd->add_option("--seed", seed, "random seed");

  std::string in_dir, format = "csv";
  CLI::App* table_cmd = app.add_subcommand("table", "print the table of a finished run");
  table_cmd->add_option("--in", in_dir, "run output directory")->required();
  table_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  std::string problem_id, dump;
  int levels = 0;
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "write the uniform mesh of a problem after L levels");
  mesh_cmd->add_option("--problem", problem_id, "problem id")->required();
  mesh_cmd->add_option("--levels", levels, "refinement levels")->required();
  mesh_cmd->add_option("--dump", dump, "mesh output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return run(config_path, out_dir, threads, seed);
    if (*table_cmd) return table(in_dir, format);
    return mesh(problem_id, levels, dump);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
