#include "femlocal/problems.hpp"

#include "femlocal/errors.hpp"

#include <cmath>
#include <numbers>

namespace femlocal {

namespace {

using std::numbers::pi;

ExactFunction sine_product() {
  return {[](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
          [](const Point& x) {
            return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                                   pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
          },
          [](const Point& x) {
            const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
            const double cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y());
            Eigen::Matrix2d h;
            h << -pi * pi * sx * sy, pi * pi * cx * cy, pi * pi * cx * cy, -pi * pi * sx * sy;
            return h;
          }};
}

ProblemCase smooth_square() {
  ProblemCase p;
  p.id = "SMOOTH_SQUARE";
  p.domain = DomainSpec::unit_square();
  p.exact = sine_product();
  p.coefficients = CoefficientField::laplacian();
  p.coefficients.f = [](const Point& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  p.coefficients.g_D = p.exact->value;
  p.subdomain = {{0.5, 0.5}, 0.25 * domain_inradius(p.domain)};
  return p;
}

// u = sin(pi x) sin(pi y) + xy/2 with A = diag(1 + x^2/2, 1 + y^2/2), b = (1, 1)/4, c = 1.
ProblemCase variable_coefficients() {
  ProblemCase p;
  p.id = "VARIABLE_COEFF";
  p.domain = DomainSpec::unit_square();
  const ExactFunction s = sine_product();
  p.exact = ExactFunction{[s](const Point& x) { return s.value(x) + 0.5 * x.x() * x.y(); },
                          [s](const Point& x) { return Eigen::Vector2d(s.gradient(x) + 0.5 * Eigen::Vector2d(x.y(), x.x())); },
                          [s](const Point& x) {
                            Eigen::Matrix2d h = s.hessian(x);
                            h(0, 1) += 0.5;
                            h(1, 0) += 0.5;
                            return h;
                          }};
  CoefficientField& c = p.coefficients;
  c.A = [](const Point& x) {
    return Eigen::Matrix2d{{1.0 + 0.5 * x.x() * x.x(), 0.0}, {0.0, 1.0 + 0.5 * x.y() * x.y()}};
  };
  c.b = [](const Point&) { return Eigen::Vector2d(0.25, 0.25); };
  c.c = [](const Point&) { return 1.0; };
  const ExactFunction u = *p.exact;
  c.f = [u](const Point& x) {
    const Eigen::Vector2d g = u.gradient(x);
    const Eigen::Matrix2d h = u.hessian(x);
    const double div_flux = x.x() * g.x() + (1.0 + 0.5 * x.x() * x.x()) * h(0, 0) + x.y() * g.y() +
                            (1.0 + 0.5 * x.y() * x.y()) * h(1, 1);
    return -div_flux + 0.25 * (g.x() + g.y()) + u.value(x);
  };
  c.g_D = u.value;
  p.subdomain = {{0.5, 0.5}, 0.25 * domain_inradius(p.domain)};
  return p;
}

// r^{2/3} sin(2 theta / 3), theta in [0, 2 pi); it vanishes on both edges at the reentrant corner.
double corner_angle(const Point& x) {
  double t = std::atan2(x.y(), x.x());
  if (t < 0.0) t += 2.0 * pi;
  return t;
}

ExactFunction corner_singularity() {
  constexpr double a = 2.0 / 3.0;
  // u = Im(z^a): grad u = (Im, Re) of a z^{a-1}; the Hessian comes from a (a-1) z^{a-2}.
  return {[](const Point& x) { return std::pow(x.norm(), a) * std::sin(a * corner_angle(x)); },
          [](const Point& x) {
            const double r = x.norm();
            if (r == 0.0) return Eigen::Vector2d(0.0, 0.0);
            const double t = corner_angle(x);
            const double m = a * std::pow(r, a - 1.0);
            return Eigen::Vector2d(m * std::sin((a - 1.0) * t), m * std::cos((a - 1.0) * t));
          },
          [](const Point& x) {
            const double r = x.norm();
            if (r == 0.0) return Eigen::Matrix2d(Eigen::Matrix2d::Zero());
            const double t = corner_angle(x);
            const double m = a * (a - 1.0) * std::pow(r, a - 2.0);
            const double im = m * std::sin((a - 2.0) * t), re = m * std::cos((a - 2.0) * t);
            return Eigen::Matrix2d{{im, re}, {re, -im}};
          }};
}

ProblemCase lshape_singular() {
  using enum BoundaryTag;
  ProblemCase p;
  p.id = "LSHAPE_SINGULAR";
  p.domain = DomainSpec::lshape({Dirichlet, Dirichlet, Dirichlet, Neumann, Neumann, Dirichlet});
  p.exact = corner_singularity();
  p.coefficients = CoefficientField::laplacian();
  p.coefficients.g_D = p.exact->value;
  const auto grad = p.exact->gradient;
  p.coefficients.g_N = [grad](const Point& x, const Eigen::Vector2d& n) { return -grad(x).dot(n); };
  p.singular_points = {Point(0.0, 0.0)};
  p.subdomain = {{-0.5, 0.5}, 0.25 * domain_inradius(p.domain)};
  return p;
}

// Corner at distance |center| = 0.778 from the center, so dist(corner, G) = 0.528 >= 2d.
ProblemCase pollution_case() {
  ProblemCase p = lshape_singular();
  p.id = "POLLUTION_CASE";
  p.subdomain = {{-0.55, 0.55}, 0.25};
  return p;
}

}  // namespace

double domain_inradius(const DomainSpec& domain) {
  switch (domain.kind) {
    case DomainKind::UnitSquare:
      return 0.5;
    case DomainKind::Rectangle:
      return 0.5 * (domain.upper - domain.lower).minCoeff();
    case DomainKind::LShape:
      // Disc centered on the diagonal through the reentrant corner: 1 - a = sqrt(2) a.
      return std::sqrt(2.0) / (1.0 + std::sqrt(2.0));
  }
  return 0.0;
}

std::vector<ProblemCase> builtin_problems() {
  return {smooth_square(), variable_coefficients(), lshape_singular(), pollution_case()};
}

ProblemCase find_problem(std::string_view id) {
  for (ProblemCase& p : builtin_problems())
    if (p.id == id) return p;
  throw ConfigError("unknown problem '" + std::string(id) + "'");
}

}  // namespace femlocal
