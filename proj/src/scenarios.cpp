#include "nullglide/scenarios.hpp"

#include "nullglide/gauge.hpp"

#include <cmath>
#include <numbers>

namespace nullglide {

bool ScenarioSpec::operator==(const ScenarioSpec& o) const {
  auto tol_eq = [](const Tolerances& a, const Tolerances& b) {
    return a.h_fd == b.h_fd && a.tol_g == b.tol_g && a.tol_shell == b.tol_shell && a.tol_ode == b.tol_ode &&
           a.tol_event == b.tol_event && a.h_lens == b.h_lens && a.tol_symp == b.tol_symp &&
           a.reproject_shell == b.reproject_shell;
  };
  const auto& fa = oneform;
  const auto& fb = o.oneform;
  const auto& ca = conformal;
  const auto& cb = o.conformal;
  return kind == o.kind && name == o.name && n == o.n && radius == o.radius && lapse_a == o.lapse_a &&
         lapse_inverse == o.lapse_inverse && exterior == o.exterior && disc_a == o.disc_a &&
         disc_b == o.disc_b && potential == o.potential && fa.constant == fb.constant &&
         fa.rotation == fb.rotation && fa.psi_amplitude == fb.psi_amplitude && fa.psi_radius == fb.psi_radius &&
         fa.psi_center == fb.psi_center && ca.mode == cb.mode && ca.c == cb.c &&
         ca.psi_amplitude == cb.psi_amplitude && ca.broken_amplitude == cb.broken_amplitude &&
         ca.transition == cb.transition && tol_eq(tol, o.tol);
}

static Vec spatial_center(int n, const std::vector<double>& c) {
  Vec v = Vec::Zero(n - 1);
  for (int i = 0; i < n - 1 && i < static_cast<int>(c.size()); ++i) v(i) = c[i];
  return v;
}

OneFormField make_oneform(int n, const OneFormSpec& spec) {
  Vec constant = Vec::Zero(n);
  for (int i = 0; i < n && i < static_cast<int>(spec.constant.size()); ++i) constant(i) = spec.constant[i];
  const double rot = spec.rotation;
  const ScalarField bump = interior_bump(n, spatial_center(n, spec.psi_center), spec.psi_radius, spec.psi_amplitude);
  const bool has_bump = spec.psi_amplitude != 0.0;
  return {[=](const Vec& x) {
    Vec a = constant;
    a(1) -= rot * x(2);
    a(2) += rot * x(1);
    if (has_bump) a += bump.grad(x);
    return a;
  }};
}

static ScalarField ball_defining_function(int n, double radius, bool exterior) {
  const double sgn = exterior ? -1.0 : 1.0;
  ScalarField f;
  f.value = [=](const Vec& x) { return sgn * (radius * radius - x.tail(n - 1).squaredNorm()) / (2.0 * radius); };
  f.gradient = [=](const Vec& x) {
    Vec g = Vec::Zero(n);
    g.tail(n - 1) = -sgn * x.tail(n - 1) / radius;
    return g;
  };
  f.hessian = [=](const Vec&) {
    Mat h = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) h(i, i) = -sgn / radius;
    return h;
  };
  return f;
}

static ScalarField time_function(int n) {
  ScalarField f;
  f.value = [](const Vec& x) { return x(0); };
  f.gradient = [n](const Vec&) {
    Vec g = Vec::Zero(n);
    g(0) = 1.0;
    return g;
  };
  f.hessian = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
  return f;
}

static void fill_common(ManifoldModel& m, int n, double radius, bool exterior, const OneFormSpec& form) {
  m.n = n;
  m.bdefun = ball_defining_function(n, radius, exterior);
  m.temporal = time_function(n);
  m.oneform = make_oneform(n, form);
  m.scalar = ScalarField::constant(n, 0.0);
  m.chart = std::make_shared<CylinderChart>(n, radius);
  m.timelike_field = [n](const Vec&) {
    Vec t = Vec::Zero(n - 1);
    t(0) = 1.0;
    return t;
  };
  m.chart_scale = radius;
  m.tol.h_fd = 1e-5 * radius;
}

Scenario make_cylinder(int n, double radius, double lapse_a, const OneFormSpec& form, bool lapse_inverse,
                       bool exterior) {
  if (n != 3 && n != 4) throw DomainError("cylinder scenario supports n = 3 or 4");
  if (!(radius > 0.0)) throw DomainError("cylinder radius must be positive");
  if (lapse_a < 0.0) throw DomainError("lapse f = 1 + a t^2 is non-positive somewhere for a < 0");
  Scenario s;
  s.spec.kind = "cylinder";
  s.spec.name = "cylinder";
  s.spec.n = n;
  s.spec.radius = radius;
  s.spec.lapse_a = lapse_a;
  s.spec.lapse_inverse = lapse_inverse;
  s.spec.exterior = exterior;
  s.spec.oneform = form;
  ManifoldModel& m = s.model;
  m.name = "cylinder";
  const double a = lapse_a;
  const bool inv = lapse_inverse;
  m.metric = MetricField(
      n,
      [=](const Vec& x) {
        Mat g = Mat::Identity(n, n);
        const double f = 1.0 + a * x(0) * x(0);
        g(0, 0) = inv ? -1.0 / f : -f;
        return g;
      },
      [=](const Vec& x) {
        MatDerivs d;
        for (int l = 0; l < n; ++l) d[l] = Mat::Zero(n, n);
        const double f = 1.0 + a * x(0) * x(0);
        const double fp = 2.0 * a * x(0);
        d[0](0, 0) = inv ? fp / (f * f) : -fp;
        return d;
      });
  fill_common(m, n, radius, exterior, form);
  s.conformal_phi = ScalarField::constant(n, 0.0);
  s.has_flat_oracle = lapse_a == 0.0 && !exterior;
  s.spec.tol = m.tol;
  return s;
}

Scenario make_product_disc(double a, double b, const OneFormSpec& form) {
  constexpr int n = 3;
  Scenario s;
  s.spec.kind = "product_disc";
  s.spec.name = "product_disc";
  s.spec.n = n;
  s.spec.radius = 1.0;
  s.spec.disc_a = a;
  s.spec.disc_b = b;
  s.spec.oneform = form;
  ManifoldModel& m = s.model;
  m.name = "product_disc";
  fill_common(m, n, 1.0, false, form);
  m.metric = MetricField(
      n,
      [=](const Vec& x) {
        const double c = (1.0 + a * (x(1) * x(1) + x(2) * x(2))) * std::exp(2.0 * b * x(1));
        Mat g = Mat::Zero(n, n);
        g(0, 0) = -1.0;
        g(1, 1) = g(2, 2) = c;
        return g;
      },
      [=](const Vec& x) {
        const double e = std::exp(2.0 * b * x(1));
        const double c = (1.0 + a * (x(1) * x(1) + x(2) * x(2))) * e;
        const double cx = 2.0 * a * x(1) * e + 2.0 * b * c;
        const double cy = 2.0 * a * x(2) * e;
        MatDerivs d;
        for (int l = 0; l < n; ++l) d[l] = Mat::Zero(n, n);
        d[1](1, 1) = d[1](2, 2) = cx;
        d[2](1, 1) = d[2](2, 2) = cy;
        return d;
      },
      m.tol.h_fd);
  s.conformal_phi = ScalarField::constant(n, 0.0);
  s.spec.tol = m.tol;
  return s;
}

static void check_constant(const ManifoldModel& m, const Region& r, const ScalarField& f, double expected) {
  if (r.empty()) return;
  std::vector<int> counts(r.dim(), 7);
  for (const Vec& xb : r.grid(counts))
    if (std::abs(f(m.chart->embed(xb)) - expected) > 1e-10)
      throw Error("conformal interpolation region intersects U or V");
}

Scenario make_conformal_variant(const Scenario& base, const ConformalSpec& conf, const Region& U,
                                const Region& V) {
  Scenario s = base;
  s.spec.conformal = conf;
  if (conf.mode == "none") return s;
  const int n = base.spec.n;
  const double r = base.spec.radius;
  const ScalarField psi = interior_bump(n, Vec::Zero(n - 1), base.spec.oneform.psi_radius, conf.psi_amplitude);
  double phi_u = 0.0, phi_v = 0.0;
  if (conf.mode == "gauge" || conf.mode == "broken") {
    phi_u = conf.c / (n - 2);
    phi_v = conf.c / n;
  } else if (conf.mode == "v_scale") {
    phi_v = -conf.c / 2.0;
  } else {
    throw Error("unknown conformal mode '" + conf.mode + "'");
  }
  ScalarField phi = axial_step(n, r, phi_v, phi_u, conf.transition);
  if (conf.mode == "broken") {
    const ScalarField step = axial_step(n, r, 1.0, 0.0, conf.transition);
    const double amp = conf.broken_amplitude;
    ScalarField broken;
    broken.value = [=](const Vec& x) { return phi(x) + amp * x(2) / r * step(x); };
    broken.gradient = [=](const Vec& x) {
      Vec g = phi.grad(x) + amp * x(2) / r * step.grad(x);
      g(2) += amp / r * step(x);
      return g;
    };
    check_constant(base.model, U, broken, phi_u);
    check_constant(base.model, U, psi, 0.0);
    check_constant(base.model, V, psi, 0.0);
    s.model = apply_gauge(base.model, broken, psi);
    s.conformal_phi = broken;
  } else {
    check_constant(base.model, U, phi, phi_u);
    check_constant(base.model, V, phi, phi_v);
    if (conf.mode == "gauge") {
      s.model = gauge_transform(base.model, phi, psi, U, V, conf.c);
    } else {
      check_constant(base.model, U, psi, 0.0);
      check_constant(base.model, V, psi, 0.0);
      s.model = apply_gauge(base.model, phi, psi);
    }
    s.conformal_phi = phi;
  }
  s.model.name = base.model.name + "/" + conf.mode;
  s.has_flat_oracle = false;
  return s;
}

Scenario build_scenario(const ScenarioSpec& spec, const Region& U, const Region& V) {
  Scenario s;
  if (spec.kind == "cylinder") {
    s = make_cylinder(spec.n, spec.radius, spec.lapse_a, spec.oneform, spec.lapse_inverse, spec.exterior);
  } else if (spec.kind == "product_disc") {
    if (spec.n != 3) throw DomainError("product disc scenario requires n = 3");
    s = make_product_disc(spec.disc_a, spec.disc_b, spec.oneform);
  } else {
    throw Error("unknown scenario kind '" + spec.kind + "'");
  }
  s.model.tol = spec.tol;
  s.model.metric = MetricField(spec.n, [m = s.model.metric](const Vec& x) { return m(x); },
                               [m = s.model.metric](const Vec& x) { return m.derivatives(x); }, spec.tol.h_fd);
  s.model.bdefun.h_fd = s.model.temporal.h_fd = spec.tol.h_fd;
  if (spec.potential != 0.0) s.model.scalar = ScalarField::constant(spec.n, spec.potential);
  s = make_conformal_variant(s, spec.conformal, U, V);
  s.spec = spec;
  s.model.name = spec.name;
  return s;
}

std::pair<double, double> chord_increment(double radius, const Vec& xi_b) {
  const double beta = std::asin(xi_b(1) / (radius * std::abs(xi_b(0))));
  const double turn = (xi_b(0) < 0.0 ? 1.0 : -1.0) * (xi_b(1) < 0.0 ? -1.0 : 1.0);
  return {2.0 * radius * std::cos(beta), turn * (std::numbers::pi - 2.0 * std::abs(beta))};
}

std::vector<OracleEvent> flat_cylinder_events(const ScenarioSpec& spec, const Vec& xb, const Vec& xi_b,
                                              int count) {
  const int n = spec.n;
  const double r = spec.radius;
  // Orthonormal tangent directions at a boundary point and angular chart coordinates.
  auto frame = [&](const Vec& xs, std::vector<Vec>& tangents, std::vector<double>& scales) {
    tangents.clear();
    scales.clear();
    if (n == 3) {
      const double th = std::atan2(xs(1), xs(0));
      tangents.push_back(make_vec({-std::sin(th), std::cos(th)}));
      scales.push_back(r);
    } else {
      const double th = std::atan2(std::hypot(xs(0), xs(1)), xs(2));
      const double ph = std::atan2(xs(1), xs(0));
      tangents.push_back(make_vec({std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th)}));
      tangents.push_back(make_vec({-std::sin(ph), std::cos(ph), 0.0}));
      scales.push_back(r);
      scales.push_back(r * std::sin(th));
    }
  };
  Vec xs(n - 1);
  if (n == 3) {
    xs << r * std::cos(xb(1)), r * std::sin(xb(1));
  } else {
    xs << r * std::sin(xb(1)) * std::cos(xb(2)), r * std::sin(xb(1)) * std::sin(xb(2)), r * std::cos(xb(1));
  }
  double t = xb(0);
  std::vector<Vec> tang;
  std::vector<double> sc;
  frame(xs, tang, sc);
  Vec xi_s = Vec::Zero(n - 1);
  for (int a = 0; a < n - 2; ++a) xi_s += xi_b(a + 1) / sc[a] * tang[a];
  const double xt = xi_b(0);
  const double m = std::sqrt(xt * xt - xi_s.squaredNorm());
  const bool future = xt < 0.0;
  const Vec rhat = xs / r;
  xi_s += (future ? -m : m) * rhat;
  std::vector<double> angles(xb.data() + 1, xb.data() + xb.size());
  std::vector<OracleEvent> out;
  for (int k = 0; k < count; ++k) {
    const Vec d = (future ? xi_s : Vec(-xi_s)) / std::abs(xt);
    const double lambda = -2.0 * xs.dot(d) / d.squaredNorm();
    xs += lambda * d;
    t += lambda;
    const Vec nrm = xs / r;
    OracleEvent ev;
    ev.xi_n = std::abs(xi_s.dot(nrm));
    frame(xs, tang, sc);
    ev.xb = Vec(n - 1);
    ev.xb(0) = t;
    if (n == 3) {
      angles[0] += std::remainder(std::atan2(xs(1), xs(0)) - angles[0], 2.0 * std::numbers::pi);
      ev.xb(1) = angles[0];
    } else {
      angles[0] = std::atan2(std::hypot(xs(0), xs(1)), xs(2));
      angles[1] += std::remainder(std::atan2(xs(1), xs(0)) - angles[1], 2.0 * std::numbers::pi);
      ev.xb(1) = angles[0];
      ev.xb(2) = angles[1];
    }
    ev.xi_b = Vec(n - 1);
    ev.xi_b(0) = xt;
    for (int a = 0; a < n - 2; ++a) ev.xi_b(a + 1) = xi_s.dot(tang[a]) * sc[a];
    out.push_back(ev);
    xi_s -= 2.0 * xi_s.dot(nrm) * nrm;
  }
  return out;
}

std::vector<Vec> boundary_sample_grid(const Scenario& s, int nt, int nangle) {
  std::vector<Vec> out;
  const int n = s.spec.n;
  for (int i = 0; i < nt; ++i) {
    const double t = nt > 1 ? -1.0 + 2.0 * i / (nt - 1) : 0.0;
    for (int j = 0; j < nangle; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / nangle;
      if (n == 3) {
        out.push_back(make_vec({t, ph}));
      } else {
        for (double th : {std::numbers::pi / 3.0, std::numbers::pi / 2.0, 2.0 * std::numbers::pi / 3.0})
          out.push_back(make_vec({t, th, ph}));
      }
    }
  }
  return out;
}

}  // namespace nullglide
