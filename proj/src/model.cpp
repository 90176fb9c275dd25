#include "nullglide/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nullglide {

MetricField::MetricField(int dim, Eval eval, Deriv deriv, double h_fd)
    : dim_(dim), eval_(std::move(eval)), deriv_(std::move(deriv)), h_fd_(h_fd) {}

MatDerivs MetricField::derivatives(const Vec& x) const {
  if (deriv_) return deriv_(x);
  return fd_derivatives(x);
}

MatDerivs MetricField::fd_derivatives(const Vec& x) const {
  MatDerivs d;
  for (int l = 0; l < dim_; ++l) {
    Vec xp = x, xm = x;
    xp(l) += h_fd_;
    xm(l) -= h_fd_;
    d[l] = (eval_(xp) - eval_(xm)) / (2.0 * h_fd_);
  }
  return d;
}

Vec ScalarField::grad(const Vec& x) const {
  if (gradient) return gradient(x);
  Vec g(x.size());
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    Vec xp = x, xm = x;
    xp(l) += h_fd;
    xm(l) -= h_fd;
    g(l) = (value(xp) - value(xm)) / (2.0 * h_fd);
  }
  return g;
}

Mat ScalarField::hess(const Vec& x) const {
  if (hessian) return hessian(x);
  const auto n = x.size();
  Mat h(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    Vec xp = x, xm = x;
    xp(l) += h_fd;
    xm(l) -= h_fd;
    h.col(l) = (grad(xp) - grad(xm)) / (2.0 * h_fd);
  }
  return 0.5 * (h + h.transpose());
}

ScalarField ScalarField::constant(int dim, double c) {
  ScalarField f;
  f.value = [c](const Vec&) { return c; };
  f.gradient = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  f.hessian = [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  return f;
}

OneFormField OneFormField::zero(int dim) {
  return {[dim](const Vec&) { return Vec(Vec::Zero(dim)); }};
}

double unwrap_near(double angle, double reference) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return angle + two_pi * std::round((reference - angle) / two_pi);
}

CylinderChart::CylinderChart(int n, double radius) : n_(n), radius_(radius) {
  if (n != 3 && n != 4) throw DomainError("cylinder chart supports n = 3 or 4");
  if (!(radius > 0.0)) throw DomainError("cylinder radius must be positive");
}

Vec CylinderChart::embed(const Vec& xb) const {
  Vec x(n_);
  x(0) = xb(0);
  if (n_ == 3) {
    x(1) = radius_ * std::cos(xb(1));
    x(2) = radius_ * std::sin(xb(1));
  } else {
    const double s = std::sin(xb(1)), c = std::cos(xb(1));
    x(1) = radius_ * s * std::cos(xb(2));
    x(2) = radius_ * s * std::sin(xb(2));
    x(3) = radius_ * c;
  }
  return x;
}

Mat CylinderChart::jacobian(const Vec& xb) const {
  Mat j = Mat::Zero(n_, n_ - 1);
  j(0, 0) = 1.0;
  const double r = radius_;
  if (n_ == 3) {
    j(1, 1) = -r * std::sin(xb(1));
    j(2, 1) = r * std::cos(xb(1));
  } else {
    const double st = std::sin(xb(1)), ct = std::cos(xb(1));
    const double sp = std::sin(xb(2)), cp = std::cos(xb(2));
    j(1, 1) = r * ct * cp;
    j(2, 1) = r * ct * sp;
    j(3, 1) = -r * st;
    j(1, 2) = -r * st * sp;
    j(2, 2) = r * st * cp;
  }
  return j;
}

MatDerivs CylinderChart::second_derivatives(const Vec& xb) const {
  MatDerivs d;
  const int m = n_ - 1;
  for (int j = 0; j < n_; ++j) d[j] = Mat::Zero(m, m);
  const double r = radius_;
  if (n_ == 3) {
    d[1](1, 1) = -r * std::cos(xb(1));
    d[2](1, 1) = -r * std::sin(xb(1));
  } else {
    const double st = std::sin(xb(1)), ct = std::cos(xb(1));
    const double sp = std::sin(xb(2)), cp = std::cos(xb(2));
    d[1](1, 1) = -r * st * cp;
    d[1](1, 2) = d[1](2, 1) = -r * ct * sp;
    d[1](2, 2) = -r * st * cp;
    d[2](1, 1) = -r * st * sp;
    d[2](1, 2) = d[2](2, 1) = r * ct * cp;
    d[2](2, 2) = -r * st * sp;
    d[3](1, 1) = -r * ct;
  }
  return d;
}

Vec CylinderChart::locate(const Vec& x, const Vec* hint) const {
  Vec xb(n_ - 1);
  xb(0) = x(0);
  if (n_ == 3) {
    double th = std::atan2(x(2), x(1));
    if (hint) th = unwrap_near(th, (*hint)(1));
    xb(1) = th;
  } else {
    xb(1) = std::atan2(std::hypot(x(1), x(2)), x(3));
    double ph = std::atan2(x(2), x(1));
    if (hint) ph = unwrap_near(ph, (*hint)(2));
    xb(2) = ph;
  }
  return xb;
}

Vec CylinderChart::periods() const {
  Vec p = Vec::Zero(n_ - 1);
  p(n_ - 2) = 2.0 * std::numbers::pi;
  return p;
}

std::string CylinderChart::describe() const {
  std::ostringstream os;
  os << "cylinder(n=" << n_ << ", radius=" << radius_ << ")";
  return os.str();
}

}  // namespace nullglide
