#pragma once

// Closed-form triangle geometry on 2x3 vertex matrices (one column per vertex).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace femlocal {

using Point = Eigen::Vector2d;
using TriangleVertices = Eigen::Matrix<double, 2, 3>;

template <typename Derived>
typename Derived::Scalar signed_area(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const auto e1 = v.col(1) - v.col(0);
  const auto e2 = v.col(2) - v.col(0);
  return S(0.5) * (e1(0) * e2(1) - e1(1) * e2(0));
}

/// Length of edge i, the edge opposite vertex i.
template <typename Derived>
typename Derived::Scalar edge_length(const Eigen::MatrixBase<Derived>& v, int i) {
  return (v.col((i + 2) % 3) - v.col((i + 1) % 3)).norm();
}

/// Diameter of a triangle: its longest edge.
template <typename Derived>
typename Derived::Scalar diameter(const Eigen::MatrixBase<Derived>& v) {
  using std::max;
  return max({edge_length(v, 0), edge_length(v, 1), edge_length(v, 2)});
}

template <typename Derived>
typename Derived::Scalar perimeter(const Eigen::MatrixBase<Derived>& v) {
  return edge_length(v, 0) + edge_length(v, 1) + edge_length(v, 2);
}

template <typename Derived>
typename Derived::Scalar inradius(const Eigen::MatrixBase<Derived>& v) {
  using std::abs;
  return 2 * abs(signed_area(v)) / perimeter(v);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> barycenter(const Eigen::MatrixBase<Derived>& v) {
  return v.rowwise().sum() / typename Derived::Scalar(3);
}

/// Gradients of the three barycentric coordinates, one column each.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 3> barycentric_gradients(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  const S twice_area = 2 * signed_area(v);
  Eigen::Matrix<S, 2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const auto& a = v.col((i + 1) % 3);
    const auto& b = v.col((i + 2) % 3);
    g(0, i) = (a(1) - b(1)) / twice_area;
    g(1, i) = (b(0) - a(0)) / twice_area;
  }
  return g;
}

/// Barycentric coordinates of x with respect to the triangle v.
template <typename Derived, typename PointDerived>
Eigen::Matrix<typename Derived::Scalar, 3, 1> barycentric_coordinates(const Eigen::MatrixBase<Derived>& v,
                                                                      const Eigen::MatrixBase<PointDerived>& x) {
  using S = typename Derived::Scalar;
  const S twice_area = 2 * signed_area(v);
  Eigen::Matrix<S, 3, 1> lambda;
  for (int i = 0; i < 3; ++i) {
    const auto& a = v.col((i + 1) % 3);
    const auto& b = v.col((i + 2) % 3);
    lambda(i) = ((a(0) - x(0)) * (b(1) - x(1)) - (a(1) - x(1)) * (b(0) - x(0))) / twice_area;
  }
  return lambda;
}

inline double distance_to_segment(const Point& x, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (x - a).norm();
  const double t = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

/// Euclidean distance from x to the closed triangle.
inline double distance_to_triangle(const TriangleVertices& v, const Point& x) {
  const Eigen::Vector3d lambda = barycentric_coordinates(v, x);
  if (lambda.minCoeff() >= 0.0) return 0.0;
  return std::min({distance_to_segment(x, v.col(0), v.col(1)), distance_to_segment(x, v.col(1), v.col(2)),
                   distance_to_segment(x, v.col(2), v.col(0))});
}

}  // namespace femlocal
