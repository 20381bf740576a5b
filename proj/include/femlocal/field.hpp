#pragma once

#include <Eigen/Core>

#include <functional>

namespace femlocal {

using Point = Eigen::Vector2d;

/// Value and derivatives of a scalar field at one point. Entries above the
/// requested order are left zero.
struct FieldSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

/// A closed-form function with derivatives. `hessian` may be empty when no
/// second derivatives are needed.
struct ExactFunction {
  std::function<double(const Point&)> value;
  std::function<Eigen::Vector2d(const Point&)> gradient;
  std::function<Eigen::Matrix2d(const Point&)> hessian;

  FieldSample sample(const Point& x, int order) const {
    FieldSample s;
    s.value = value(x);
    if (order >= 1) s.gradient = gradient(x);
    if (order >= 2 && hessian) s.hessian = hessian(x);
    return s;
  }
};

/// Field evaluated element by element: (element, barycentric coordinates, physical point, order).
/// Finite element functions use the first two arguments, closed-form functions the third.
using ElementField = std::function<FieldSample(int, const Eigen::Vector3d&, const Point&, int)>;

inline ElementField as_field(ExactFunction f) {
  return [f = std::move(f)](int, const Eigen::Vector3d&, const Point& x, int order) { return f.sample(x, order); };
}

/// Pointwise difference a - b.
inline ElementField difference(ElementField a, ElementField b) {
  return [a = std::move(a), b = std::move(b)](int e, const Eigen::Vector3d& l, const Point& x, int order) {
    FieldSample sa = a(e, l, x, order);
    const FieldSample sb = b(e, l, x, order);
    sa.value -= sb.value;
    sa.gradient -= sb.gradient;
    sa.hessian -= sb.hessian;
    return sa;
  };
}

/// Pointwise product a * b (derivatives by the product rule).
inline ElementField product(ElementField a, ElementField b) {
  return [a = std::move(a), b = std::move(b)](int e, const Eigen::Vector3d& l, const Point& x, int order) {
    const FieldSample sa = a(e, l, x, order);
    const FieldSample sb = b(e, l, x, order);
    FieldSample s;
    s.value = sa.value * sb.value;
    if (order >= 1) s.gradient = sa.gradient * sb.value + sa.value * sb.gradient;
    if (order >= 2)
      s.hessian = sa.hessian * sb.value + sa.value * sb.hessian + sa.gradient * sb.gradient.transpose() +
                  sb.gradient * sa.gradient.transpose();
    return s;
  };
}

inline ElementField scaled(ElementField a, double factor) {
  return [a = std::move(a), factor](int e, const Eigen::Vector3d& l, const Point& x, int order) {
    FieldSample s = a(e, l, x, order);
    s.value *= factor;
    s.gradient *= factor;
    s.hessian *= factor;
    return s;
  };
}

}  // namespace femlocal
