#include "femlocal/cutoff.hpp"

#include "femlocal/errors.hpp"

#include <algorithm>
#include <cmath>

namespace femlocal {

namespace {

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// S(t) = t^{m+1} sum_j C(m+j, j) (1-t)^j expanded into monomials.
std::vector<double> smoothstep_coefficients(int m) {
  std::vector<double> c(2 * m + 2, 0.0);
  for (int j = 0; j <= m; ++j) {
    const double a = binomial(m + j, j);
    for (int i = 0; i <= j; ++i) c[m + 1 + i] += a * binomial(j, i) * ((i % 2) ? -1.0 : 1.0);
  }
  return c;
}

// Third and fourth derivative tensors are taken by central differences of the closed-form Hessian.
double tensor_norm_by_differences(const Cutoff& w, const Point& x, int j) {
  const double d = w.width();
  double sum = 0.0;
  if (j == 3) {
    const double h = 1e-4 * d;
    for (int a = 0; a < 2; ++a) {
      const Point e = Point::Unit(a) * h;
      sum += ((w.hessian(x + e) - w.hessian(x - e)) / (2.0 * h)).squaredNorm();
    }
  } else {
    const double h = 2e-3 * d;
    const Eigen::Matrix2d center = w.hessian(x);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Point ea = Point::Unit(a) * h, eb = Point::Unit(b) * h;
        Eigen::Matrix2d dd;
        if (a == b)
          dd = (w.hessian(x + ea) - 2.0 * center + w.hessian(x - ea)) / (h * h);
        else
          dd = (w.hessian(x + ea + eb) - w.hessian(x + ea - eb) - w.hessian(x - ea + eb) + w.hessian(x - ea - eb)) /
               (4.0 * h * h);
        sum += dd.squaredNorm();
      }
  }
  return std::sqrt(sum);
}

}  // namespace

Cutoff::Cutoff(Point center, double r_in, double r_out, int order)
    : center_(std::move(center)), r_in_(r_in), r_out_(r_out), order_(order) {
  if (!(r_in > 0.0) || !(r_in < r_out)) throw ConfigError("cutoff needs 0 < R_in < R_out");
  if (order < 1 || order > 10) throw ConfigError("cutoff order must lie in 1..10");
  coefficients_ = smoothstep_coefficients(order);
  bounds_.push_back(1.0);
  for (int j = 1; j <= std::min(order, 4); ++j) bounds_.push_back(bound_constant(j, 10001));
}

double Cutoff::profile(double t, int j) const {
  // Horner on the j-th derivative of the monomial expansion.
  double s = 0.0;
  for (int i = static_cast<int>(coefficients_.size()) - 1; i >= j; --i) {
    double falling = 1.0;
    for (int q = 0; q < j; ++q) falling *= i - q;
    s = s * t + falling * coefficients_[i];
  }
  return s;
}

double Cutoff::value(const Point& x) const {
  const double t = std::clamp((r_out_ - (x - center_).norm()) / width(), 0.0, 1.0);
  return profile(t, 0);
}

Eigen::Vector2d Cutoff::gradient(const Point& x) const { return sample(x, 1).gradient; }
Eigen::Matrix2d Cutoff::hessian(const Point& x) const { return sample(x, 2).hessian; }

FieldSample Cutoff::sample(const Point& x, int order) const {
  FieldSample s;
  const Eigen::Vector2d rel = x - center_;
  const double r = rel.norm();
  const double d = width();
  const double t = std::clamp((r_out_ - r) / d, 0.0, 1.0);
  s.value = profile(t, 0);
  // Derivatives vanish where t is clamped, including r = 0 (inside r_in > 0).
  if (order < 1 || r <= r_in_ || r >= r_out_) return s;
  const Eigen::Vector2d e = rel / r;
  const double w_r = -profile(t, 1) / d;
  s.gradient = w_r * e;
  if (order >= 2) {
    const double w_rr = profile(t, 2) / (d * d);
    const Eigen::Matrix2d ee = e * e.transpose();
    s.hessian = w_rr * ee + (w_r / r) * (Eigen::Matrix2d::Identity() - ee);
  }
  return s;
}

ElementField Cutoff::field() const {
  return [w = *this](int, const Eigen::Vector3d&, const Point& x, int order) { return w.sample(x, order); };
}

ExactFunction Cutoff::function() const {
  const Cutoff w = *this;
  return {[w](const Point& x) { return w.value(x); }, [w](const Point& x) { return w.gradient(x); },
          [w](const Point& x) { return w.hessian(x); }};
}

double Cutoff::bound_constant(int j, int samples) const {
  if (j == 0) return 1.0;
  if (j < 0 || j > std::min(order_, 4)) throw ConfigError("bound constant order exceeds the cutoff smoothness");
  const double d = width();
  double sup = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const double r = r_out_ - t * d;
    double v = 0.0;
    if (j == 1) {
      v = std::abs(profile(t, 1));
    } else if (j == 2) {
      const double s1 = profile(t, 1), s2 = profile(t, 2);
      v = std::sqrt(s2 * s2 + (d * s1 / r) * (d * s1 / r));
    } else {
      v = std::pow(d, j) * tensor_norm_by_differences(*this, center_ + Point(r, 0.0), j);
    }
    sup = std::max(sup, v);
  }
  return sup;
}

Cutoff build_cutoff(const Point& center, double r_in, double r_out, int order) {
  return Cutoff(center, r_in, r_out, order);
}

}  // namespace femlocal
