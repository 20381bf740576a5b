#include "femlocal/quadrature.hpp"

#include "femlocal/errors.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <utility>
#include <numbers>
#include <vector>

namespace femlocal {

namespace {

/// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

LineRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: need at least one point");
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    // Ascending order on [0, 1].
    rule.points(n - 1 - i) = 0.5 * (x + 1.0);
    rule.weights(n - 1 - i) = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

namespace {

QuadratureRule from_orbits(const std::vector<std::array<double, 4>>& orbits, int exactness) {
  // Each orbit: (a, b, c, w) expanded over distinct permutations of (a, b, c).
  std::vector<std::array<double, 4>> pts;
  for (const auto& o : orbits) {
    const double a = o[0], b = o[1], c = o[2], w = o[3];
    std::array<std::array<double, 3>, 6> perms{{{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
    std::vector<std::array<double, 3>> unique;
    for (const auto& p : perms) {
      bool seen = false;
      for (const auto& u : unique) seen = seen || (u == p);
      if (!seen) unique.push_back(p);
    }
    for (const auto& u : unique) pts.push_back({u[0], u[1], u[2], w});
  }
  QuadratureRule rule;
  rule.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  rule.weights.resize(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rule.points.row(i) << pts[i][0], pts[i][1], pts[i][2];
    rule.weights(i) = pts[i][3];
  }
  rule.exactness_degree = exactness;
  return rule;
}

QuadratureRule collapsed_symmetric(int degree) {
  const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
  const LineRule g = gauss_legendre(n);
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  QuadratureRule rule;
  rule.points.resize(6 * n * n, 3);
  rule.weights.resize(6 * n * n);
  int q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double s = g.points(i), t = g.points(j);
      const double x = s * (1.0 - t), y = t;
      const double w = g.weights(i) * g.weights(j) * (1.0 - t) / 6.0;
      const double lam[3] = {1.0 - x - y, x, y};
      for (const auto& p : perms) {
        rule.points.row(q) << lam[p[0]], lam[p[1]], lam[p[2]];
        rule.weights(q) = w;
        ++q;
      }
    }
  rule.exactness_degree = 2 * n - 2;
  return rule;
}

QuadratureRule make_rule(int degree) {
  if (degree <= 1) return from_orbits({{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5}}, 1);
  if (degree == 2) return from_orbits({{2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6}}, 2);
  if (degree <= 5) {
    const double r = std::sqrt(15.0);
    const double a1 = (6.0 - r) / 21.0, a2 = (6.0 + r) / 21.0;
    return from_orbits({{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 80.0},
                        {1.0 - 2 * a1, a1, a1, (155.0 - r) / 2400.0},
                        {1.0 - 2 * a2, a2, a2, (155.0 + r) / 2400.0}},
                       5);
  }
  return collapsed_symmetric(degree);
}

}  // namespace

const QuadratureRule& quadrature_rule(int degree) {
  if (degree < 1 || degree > 20) throw ConfigError("quadrature degree must lie in [1, 20], got " + std::to_string(degree));
  static std::array<QuadratureRule, 21> cache;
  static std::array<std::once_flag, 21> once;
  std::call_once(once[degree], [degree] { cache[degree] = make_rule(degree); });
  return cache[degree];
}

}  // namespace femlocal
