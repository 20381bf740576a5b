#include "femlocal/errors.hpp"
#include "femlocal/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

namespace femlocal {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%#.12g", v);
  return buf;
}

/// Rounded to 12 significant digits so that re-emitting parsed output is byte-stable.
ojson json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

double number_from(const ojson& j) { return j.is_null() ? kMissing : j.get<double>(); }

const char* const kFixedColumns[] = {"level",          "dofs",          "h_max",
                                     "h_min",          "quasi_uniformity_ratio",
                                     "global_H1_error", "local_H1_error", "pollution_term"};
const char* const kEocColumns[] = {"eoc_global_H1", "eoc_local_H1", "eoc_pollution"};

std::vector<std::string> columns(const ConvergenceTable& table) {
  std::vector<std::string> c(std::begin(kFixedColumns), std::end(kFixedColumns));
  for (const std::string& id : table.checks) c.push_back("C_" + id);
  c.insert(c.end(), std::begin(kEocColumns), std::end(kEocColumns));
  return c;
}

double constant_of(const TableRow& row, const std::string& id) {
  for (const auto& [name, v] : row.effective_constants)
    if (name == id) return v;
  return kMissing;
}

ojson report_to_json(const EstimateReport& r) {
  ojson j;
  j["inequality"] = std::string(inequality_id(r.inequality));
  j["level"] = r.level;
  j["degree"] = r.degree;
  j["d"] = json_number(r.d);
  ojson radii = ojson::array();
  for (double x : r.radii) radii.push_back(json_number(x));
  j["radii"] = radii;
  j["lhs"] = json_number(r.lhs);
  ojson terms = ojson::object();
  for (const auto& [name, v] : r.rhs_terms) terms[name] = json_number(v);
  j["rhs_terms"] = terms;
  j["effective_constant"] = json_number(r.effective_constant);
  j["trivial"] = r.trivial;
  j["seed"] = r.seed ? ojson(*r.seed) : ojson(nullptr);
  ojson pre = ojson::object();
  for (const auto& [name, pass] : r.preconditions) pre[name] = pass;
  j["preconditions"] = pre;
  ojson extras = ojson::object();
  for (const auto& [name, v] : r.extras) extras[name] = json_number(v);
  j["extras"] = extras;
  return j;
}

EstimateReport report_from_json(const ojson& j) {
  EstimateReport r;
  r.inequality = inequality_from_id(j.at("inequality").get<std::string>());
  r.level = j.at("level").get<int>();
  r.degree = j.at("degree").get<int>();
  r.d = number_from(j.at("d"));
  for (const auto& x : j.at("radii")) r.radii.push_back(number_from(x));
  r.lhs = number_from(j.at("lhs"));
  for (const auto& [name, v] : j.at("rhs_terms").items()) r.rhs_terms.emplace_back(name, number_from(v));
  r.effective_constant = number_from(j.at("effective_constant"));
  r.trivial = j.at("trivial").get<bool>();
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [name, v] : j.at("preconditions").items()) r.preconditions.emplace_back(name, v.get<bool>());
  for (const auto& [name, v] : j.at("extras").items()) r.extras.emplace_back(name, number_from(v));
  return r;
}

void write_file(const std::string& directory, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  const std::filesystem::path path = std::filesystem::path(directory) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

OutputFormat format_from_name(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw ConfigError("format must be csv or json");
}

std::string table_csv(const ConvergenceTable& table) {
  std::string out;
  const std::vector<std::string> cols = columns(table);
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const TableRow& r : table.rows) {
    out += std::to_string(r.level) + "," + std::to_string(r.dofs);
    for (double v : {r.h_max, r.h_min, r.quasi_uniformity_ratio, r.global_H1_error, r.local_H1_error, r.pollution_term})
      out += "," + csv_number(v);
    for (const std::string& id : table.checks) out += "," + csv_number(constant_of(r, id));
    for (double v : {r.eoc_global_H1, r.eoc_local_H1, r.eoc_pollution}) out += "," + csv_number(v);
    out += "\n";
  }
  return out;
}

std::string report_json(const EstimateReport& report) { return report_to_json(report).dump(2) + "\n"; }

std::string results_json(const ConvergenceTable& table, const std::vector<EstimateReport>& reports) {
  ojson j;
  j["problem"] = table.problem;
  j["degree"] = table.degree;
  j["mesh"] = table.graded ? "graded" : "uniform";
  j["checks"] = table.checks;
  j["columns"] = columns(table);
  ojson rows = ojson::array();
  for (const TableRow& r : table.rows) {
    ojson row;
    row["level"] = r.level;
    row["dofs"] = r.dofs;
    row["h_max"] = json_number(r.h_max);
    row["h_min"] = json_number(r.h_min);
    row["quasi_uniformity_ratio"] = json_number(r.quasi_uniformity_ratio);
    row["global_H1_error"] = json_number(r.global_H1_error);
    row["local_H1_error"] = json_number(r.local_H1_error);
    row["pollution_term"] = json_number(r.pollution_term);
    ojson constants = ojson::object();
    for (const auto& [id, v] : r.effective_constants) constants[id] = json_number(v);
    row["effective_constants"] = constants;
    ojson failures = ojson::object();
    for (const auto& [id, why] : r.failures) failures[id] = why;
    row["failures"] = failures;
    row["eoc_global_H1"] = json_number(r.eoc_global_H1);
    row["eoc_local_H1"] = json_number(r.eoc_local_H1);
    row["eoc_pollution"] = json_number(r.eoc_pollution);
    rows.push_back(row);
  }
  j["rows"] = rows;
  ojson reps = ojson::array();
  for (const EstimateReport& r : reports) reps.push_back(report_to_json(r));
  j["reports"] = reps;
  return j.dump(2) + "\n";
}

std::pair<ConvergenceTable, std::vector<EstimateReport>> parse_results_json(std::string_view text) {
  try {
    const ojson j = ojson::parse(text);
    ConvergenceTable t;
    t.problem = j.at("problem").get<std::string>();
    t.degree = j.at("degree").get<int>();
    t.graded = j.at("mesh").get<std::string>() == "graded";
    t.checks = j.at("checks").get<std::vector<std::string>>();
    for (const ojson& row : j.at("rows")) {
      TableRow r;
      r.level = row.at("level").get<int>();
      r.dofs = row.at("dofs").get<long>();
      r.h_max = number_from(row.at("h_max"));
      r.h_min = number_from(row.at("h_min"));
      r.quasi_uniformity_ratio = number_from(row.at("quasi_uniformity_ratio"));
      r.global_H1_error = number_from(row.at("global_H1_error"));
      r.local_H1_error = number_from(row.at("local_H1_error"));
      r.pollution_term = number_from(row.at("pollution_term"));
      for (const auto& [id, v] : row.at("effective_constants").items()) r.effective_constants.emplace_back(id, number_from(v));
      for (const auto& [id, why] : row.at("failures").items()) r.failures.emplace_back(id, why.get<std::string>());
      r.eoc_global_H1 = number_from(row.at("eoc_global_H1"));
      r.eoc_local_H1 = number_from(row.at("eoc_local_H1"));
      r.eoc_pollution = number_from(row.at("eoc_pollution"));
      t.rows.push_back(std::move(r));
    }
    std::vector<EstimateReport> reports;
    for (const ojson& r : j.at("reports")) reports.push_back(report_from_json(r));
    return {std::move(t), std::move(reports)};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed results file: ") + e.what());
  }
}

void emit(const ConvergenceTable& table, const std::vector<EstimateReport>& reports, OutputFormat format,
          const std::string& directory) {
  if (table.rows.empty()) throw ConfigError("emit: empty table");
  if (format == OutputFormat::Csv)
    write_file(directory, "table.csv", table_csv(table));
  else
    write_file(directory, "results.json", results_json(table, reports));
}

}  // namespace femlocal
