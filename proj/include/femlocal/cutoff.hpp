#pragma once

#include "femlocal/field.hpp"

#include <vector>

namespace femlocal {

/// Radial cutoff omega(x) = S(t), t = clamp((r_out - |x - center|) / width, 0, 1), where S is
/// the degree 2m+1 smoothstep with S(0) = 0, S(1) = 1 and derivatives 1..m vanishing at both ends.
/// omega = 1 on the closed ball of radius r_in and 0 outside the open ball of radius r_out.
class Cutoff {
 public:
  Cutoff(Point center, double r_in, double r_out, int order);

  const Point& center() const { return center_; }
  double r_in() const { return r_in_; }
  double r_out() const { return r_out_; }
  /// d = r_out - r_in.
  double width() const { return r_out_ - r_in_; }
  int order() const { return order_; }

  /// j-th derivative of the profile S at t in [0, 1].
  double profile(double t, int j = 0) const;

  double value(const Point& x) const;
  Eigen::Vector2d gradient(const Point& x) const;
  Eigen::Matrix2d hessian(const Point& x) const;
  FieldSample sample(const Point& x, int order) const;
  ElementField field() const;
  ExactFunction function() const;

  /// C_j = d^j sup |D^j omega|, j = 0..min(m, 4); Frobenius norm of the derivative tensor.
  const std::vector<double>& bound_constants() const { return bounds_; }
  /// Same quantity, recomputed on `samples` radii.
  double bound_constant(int j, int samples) const;

 private:
  Point center_;
  double r_in_;
  double r_out_;
  int order_;
  std::vector<double> coefficients_;  // monomial coefficients of S, ascending
  std::vector<double> bounds_;
};

/// Errors: r_in <= 0, r_in >= r_out, or order outside 1..10 raise ConfigError.
Cutoff build_cutoff(const Point& center, double r_in, double r_out, int order);

}  // namespace femlocal
