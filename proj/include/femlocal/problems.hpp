#pragma once

#include "femlocal/forms.hpp"
#include "femlocal/mesh.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace femlocal {

/// Subdomain G = ball(center, d); the estimates use concentric balls of radius d/4 and d/2 inside it.
struct SubdomainDefaults {
  Point center{0.0, 0.0};
  double d = 0.0;
};

/// A benchmark: domain with tags, coefficients with data generated from the exact solution,
/// and the subdomain where local quantities are measured.
struct ProblemCase {
  std::string id;
  DomainSpec domain;
  CoefficientField coefficients;
  std::optional<ExactFunction> exact;
  std::vector<Point> singular_points;  // mesh vertices where the exact solution is not smooth
  SubdomainDefaults subdomain;
};

/// SMOOTH_SQUARE, VARIABLE_COEFF, LSHAPE_SINGULAR, POLLUTION_CASE.
std::vector<ProblemCase> builtin_problems();

/// ConfigError for unknown ids.
ProblemCase find_problem(std::string_view id);

/// Radius of the largest disc inside the domain.
double domain_inradius(const DomainSpec& domain);

}  // namespace femlocal
