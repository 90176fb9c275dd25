#include "nullglide/gauge.hpp"

#include "nullglide/geometry.hpp"

#include <cmath>
#include <sstream>

namespace nullglide {

ManifoldModel apply_gauge(const ManifoldModel& model, const ScalarField& phi, const ScalarField& psi,
                          bool carry_potential) {
  ManifoldModel out = model;
  const MetricField base = model.metric;
  const int n = model.n;
  out.metric = MetricField(
      n, [base, phi](const Vec& x) { return Mat(std::exp(-2.0 * phi(x)) * base(x)); },
      [base, phi, n](const Vec& x) {
        const double e = std::exp(-2.0 * phi(x));
        const Mat g = base(x);
        const Vec dphi = phi.grad(x);
        MatDerivs d = base.derivatives(x);
        for (int l = 0; l < n; ++l) d[l] = e * (d[l] - 2.0 * dphi(l) * g);
        return d;
      },
      base.h_fd());
  const OneFormField a = model.oneform;
  out.oneform = {[a, psi](const Vec& x) { return Vec(a(x) - psi.grad(x)); }};
  if (carry_potential) {
    const ScalarField q = model.scalar;
    const ManifoldModel original = model;
    out.scalar.value = [q, phi, original](const Vec& x) {
      return std::exp(2.0 * phi(x)) * (q(x) + potential_correction(original, phi, x));
    };
    out.scalar.gradient = nullptr;
    out.scalar.hessian = nullptr;
  }
  return out;
}

double potential_correction(const ManifoldModel& model, const ScalarField& phi, const Vec& x) {
  const MetricEval m = metric_eval(model, x);
  const double k = (2.0 - model.n) / 2.0;
  const Vec dphi = phi.grad(x);
  const Mat h = phi.hess(x);
  double contracted = 0.0;
  for (int l = 0; l < model.n; ++l) contracted += (m.g_inv.cwiseProduct(m.christoffel[l])).sum() * dphi(l);
  return k * (m.g_inv.cwiseProduct(h)).sum() + k * k * dphi.dot(m.g_inv * dphi) - k * contracted;
}

static void check_region(const ManifoldModel& model, const Region& r, const ScalarField& f, double expected,
                         const char* what, int samples) {
  if (r.empty()) return;
  std::vector<int> counts(r.dim(), samples);
  for (const Vec& xb : r.grid(counts)) {
    const double v = f(model.chart->embed(xb));
    if (std::abs(v - expected) > 1e-10) {
      std::ostringstream os;
      os << "gauge constancy violated for " << what << ": value " << v << ", expected " << expected;
      throw Error(os.str());
    }
  }
}

ManifoldModel gauge_transform(const ManifoldModel& model, const ScalarField& phi, const ScalarField& psi,
                              const Region& U, const Region& V, double c, int samples) {
  check_region(model, U, phi, c / (model.n - 2), "phi on U", samples);
  check_region(model, V, phi, c / model.n, "phi on V", samples);
  check_region(model, U, psi, 0.0, "psi on U", samples);
  check_region(model, V, psi, 0.0, "psi on V", samples);
  return apply_gauge(model, phi, psi);
}

ScalarField interior_bump(int n, const Vec& center, double radius, double amplitude) {
  ScalarField f;
  auto parts = [n, center, radius](const Vec& x, double& s, Vec& d) {
    d = x.segment(1, n - 1) - center;
    s = d.squaredNorm() / (radius * radius);
  };
  f.value = [=](const Vec& x) {
    double s;
    Vec d;
    parts(x, s, d);
    if (s >= 1.0 || amplitude == 0.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - s)) * (1.0 + 0.5 * std::sin(x(0)));
  };
  f.gradient = [=](const Vec& x) {
    double s;
    Vec d;
    parts(x, s, d);
    Vec g = Vec::Zero(n);
    if (s >= 1.0 || amplitude == 0.0) return g;
    const double b = std::exp(1.0 - 1.0 / (1.0 - s));
    const double db = -b / ((1.0 - s) * (1.0 - s));
    const double mod = 1.0 + 0.5 * std::sin(x(0));
    g(0) = amplitude * b * 0.5 * std::cos(x(0));
    g.segment(1, n - 1) = amplitude * mod * db * 2.0 * d / (radius * radius);
    return g;
  };
  return f;
}

namespace {

double edge(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double edge_prime(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

}  // namespace

ScalarField axial_step(int n, double radius, double lo, double hi, double w) {
  auto step = [w](double u, double& value, double& slope) {
    const double s = (u + w) / (2.0 * w);
    const double a = edge(s), b = edge(1.0 - s);
    value = a / (a + b);
    slope = (edge_prime(s) * b + a * edge_prime(1.0 - s)) / ((a + b) * (a + b)) / (2.0 * w);
  };
  ScalarField f;
  f.value = [=](const Vec& x) {
    double v, d;
    step(x(1) / radius, v, d);
    return lo + (hi - lo) * v;
  };
  f.gradient = [=](const Vec& x) {
    double v, d;
    step(x(1) / radius, v, d);
    Vec g = Vec::Zero(n);
    g(1) = (hi - lo) * d / radius;
    return g;
  };
  return f;
}

}  // namespace nullglide
