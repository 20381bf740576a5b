#pragma once

#include <Eigen/Core>

namespace femlocal {

/// Quadrature on the reference triangle {x, y >= 0, x + y <= 1}. Points are
/// barycentric rows (lambda0, lambda1, lambda2) with (x, y) = (lambda1, lambda2);
/// weights sum to the reference area 1/2.
struct QuadratureRule {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  Eigen::VectorXd weights;
  int exactness_degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Symmetric rule integrating every polynomial of total degree <= `degree` exactly,
/// 1 <= degree <= 20. Degree 1 is the centroid rule; degrees up to 5 use the classical
/// 3- and 7-point rules; higher degrees symmetrize a collapsed Gauss-Legendre product rule
/// over the six vertex permutations.
const QuadratureRule& quadrature_rule(int degree);

/// Gauss-Legendre rule with n points on [0, 1].
struct LineRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};
LineRule gauss_legendre(int n);

}  // namespace femlocal
