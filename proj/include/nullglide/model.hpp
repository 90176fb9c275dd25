#pragma once

#include "nullglide/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace nullglide {

struct Tolerances {
  double h_fd = 1e-5;
  double tol_g = 1e-9;
  double tol_shell = 1e-8;
  double tol_ode = 1e-10;
  double tol_event = 1e-13;
  double h_lens = 1e-5;
  double tol_symp = 1e-5;
  bool reproject_shell = true;
};

class MetricField {
 public:
  using Eval = std::function<Mat(const Vec&)>;
  using Deriv = std::function<MatDerivs(const Vec&)>;

  MetricField() = default;
  MetricField(int dim, Eval eval, Deriv deriv = nullptr, double h_fd = 1e-5);

  int dim() const { return dim_; }
  Mat operator()(const Vec& x) const { return eval_(x); }
  MatDerivs derivatives(const Vec& x) const;
  MatDerivs fd_derivatives(const Vec& x) const;
  bool has_analytic_derivatives() const { return static_cast<bool>(deriv_); }
  double h_fd() const { return h_fd_; }

 private:
  int dim_ = 0;
  Eval eval_;
  Deriv deriv_;
  double h_fd_ = 1e-5;
};

struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  double h_fd = 1e-5;

  double operator()(const Vec& x) const { return value(x); }
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x) const;

  static ScalarField constant(int dim, double c);
};

struct OneFormField {
  std::function<Vec(const Vec&)> components;

  Vec operator()(const Vec& x) const { return components(x); }
  static OneFormField zero(int dim);
};

// Boundary chart: x' in R^{n-1} mapped into the interior chart.
class BoundaryChart {
 public:
  virtual ~BoundaryChart() = default;
  virtual int dim() const = 0;
  virtual Vec embed(const Vec& xb) const = 0;
  // n x (n-1), column a = dX/dx'^a.
  virtual Mat jacobian(const Vec& xb) const = 0;
  // second[j](a,b) = d^2 X^j / dx'^a dx'^b.
  virtual MatDerivs second_derivatives(const Vec& xb) const = 0;
  // Inverse of embed for points on the boundary; periodic coordinates unwrapped towards hint.
  virtual Vec locate(const Vec& x, const Vec* hint = nullptr) const = 0;
  // Period per coordinate, 0 when not periodic.
  virtual Vec periods() const = 0;
  virtual std::string describe() const = 0;
};

// Boundary of R x (ball of radius R): (t, theta) for n = 3, (t, polar, azimuth) for n = 4.
class CylinderChart final : public BoundaryChart {
 public:
  CylinderChart(int n, double radius);
  int dim() const override { return n_ - 1; }
  Vec embed(const Vec& xb) const override;
  Mat jacobian(const Vec& xb) const override;
  MatDerivs second_derivatives(const Vec& xb) const override;
  Vec locate(const Vec& x, const Vec* hint = nullptr) const override;
  Vec periods() const override;
  std::string describe() const override;
  double radius() const { return radius_; }

 private:
  int n_;
  double radius_;
};

double unwrap_near(double angle, double reference);

struct ManifoldModel {
  std::string name;
  int n = 3;
  MetricField metric;
  ScalarField bdefun;
  ScalarField temporal;
  OneFormField oneform;
  ScalarField scalar;
  std::shared_ptr<const BoundaryChart> chart;
  // Future-pointing timelike boundary vector, boundary chart components. Truth only.
  std::function<Vec(const Vec&)> timelike_field;
  std::function<bool(const Vec&)> in_domain;
  double chart_scale = 1.0;
  Tolerances tol;
};

}  // namespace nullglide
