#include "nullglide/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace nullglide {

const char* to_string(CovectorClass c) {
  switch (c) {
    case CovectorClass::Elliptic: return "elliptic";
    case CovectorClass::Glancing: return "glancing";
    case CovectorClass::Hyperbolic: return "hyperbolic";
  }
  return "?";
}

const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Future: return "future";
    case Orientation::Past: return "past";
    case Orientation::None: return "none";
  }
  return "?";
}

void check_domain(const ManifoldModel& model, const Vec& x) {
  if (x.size() != model.n || !x.allFinite()) throw DomainError("point outside chart domain");
  if (model.in_domain && !model.in_domain(x)) throw DomainError("point outside chart domain");
}

MatDerivs inverse_derivatives(const Mat& g_inv, const MatDerivs& dg, int n) {
  MatDerivs d;
  for (int l = 0; l < n; ++l) d[l] = -g_inv * dg[l] * g_inv;
  return d;
}

static Mat checked_inverse(const Mat& g) {
  const double scale = g.cwiseAbs().maxCoeff();
  const double det = g.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(scale, static_cast<double>(g.rows()))))
    throw DomainError("singular metric");
  return g.inverse();
}

Mat inverse_metric(const ManifoldModel& model, const Vec& x) {
  check_domain(model, x);
  return checked_inverse(model.metric(x));
}

MetricEval metric_eval(const ManifoldModel& model, const Vec& x) {
  check_domain(model, x);
  const int n = model.n;
  MetricEval m;
  m.g = model.metric(x);
  m.g = 0.5 * (m.g + m.g.transpose());
  m.g_inv = checked_inverse(m.g);
  m.dg = model.metric.derivatives(x);
  for (int k = 0; k < n; ++k) m.christoffel[k] = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const double lower = 0.5 * (m.dg[i](l, j) + m.dg[j](l, i) - m.dg[l](i, j));
        if (lower == 0.0) continue;
        for (int k = 0; k < n; ++k) m.christoffel[k](i, j) += m.g_inv(k, l) * lower;
      }
  return m;
}

BoundaryMetric boundary_metric(const ManifoldModel& model, const Vec& xb) {
  const Vec x = model.chart->embed(xb);
  const Mat j = model.chart->jacobian(xb);
  const MatDerivs second = model.chart->second_derivatives(xb);
  check_domain(model, x);
  const Mat g = model.metric(x);
  const MatDerivs dg = model.metric.derivatives(x);
  const int m = model.n - 1;
  BoundaryMetric b;
  b.g = j.transpose() * g * j;
  b.g = 0.5 * (b.g + b.g.transpose());
  b.g_inv = checked_inverse(b.g);
  b.det = b.g.determinant();
  for (int a = 0; a < m; ++a) {
    Mat dj(model.n, m);
    for (int r = 0; r < model.n; ++r)
      for (int c = 0; c < m; ++c) dj(r, c) = second[r](a, c);
    Mat dga = Mat::Zero(model.n, model.n);
    for (int l = 0; l < model.n; ++l) dga += dg[l] * j(l, a);
    b.dg[a] = dj.transpose() * g * j + j.transpose() * g * dj + j.transpose() * dga * j;
  }
  return b;
}

double principal_symbol(const ManifoldModel& model, const PhasePoint& pp) {
  const Mat gi = inverse_metric(model, pp.x);
  return -pp.xi.dot(gi * pp.xi);
}

double shell_residual(const ManifoldModel& model, const PhasePoint& pp) {
  return std::abs(principal_symbol(model, pp)) / pp.xi.squaredNorm();
}

Orientation orientation_of(const ManifoldModel& model, const Vec& xb, const Vec& xi_b) {
  if (!model.timelike_field) return Orientation::None;
  const double s = xi_b.dot(model.timelike_field(xb));
  if (s < 0.0) return Orientation::Future;
  if (s > 0.0) return Orientation::Past;
  return Orientation::None;
}

BoundaryCovector classify_covector(const ManifoldModel& model, const Vec& xb, const Vec& xi_b) {
  const double norm2 = xi_b.squaredNorm();
  if (!(norm2 > 0.0)) throw ClassificationError("zero covector");
  const BoundaryMetric b = boundary_metric(model, xb);
  const double q = xi_b.dot(b.g_inv * xi_b);
  BoundaryCovector bc{xb, xi_b, CovectorClass::Elliptic, Orientation::None};
  const double band = model.tol.tol_g * norm2;
  if (q < -band) {
    bc.cls = CovectorClass::Hyperbolic;
  } else if (std::abs(q) <= band) {
    bc.cls = CovectorClass::Glancing;
  }
  if (bc.cls != CovectorClass::Elliptic) bc.orientation = orientation_of(model, xb, xi_b);
  return bc;
}

Vec inward_normal(const ManifoldModel& model, const Vec& x) {
  const Mat gi = inverse_metric(model, x);
  const Vec d = model.bdefun.grad(x);
  const double norm2 = d.dot(gi * d);
  if (!(norm2 > 0.0)) throw DomainError("boundary defining function has non-spacelike gradient");
  return gi * d / std::sqrt(norm2);
}

double normal_component(const ManifoldModel& model, const Vec& x, const Vec& xi) {
  return xi.dot(inward_normal(model, x));
}

double lift_normal_magnitude(const ManifoldModel& model, const Vec& xb, const Vec& xi_b) {
  const BoundaryMetric b = boundary_metric(model, xb);
  const double q = xi_b.dot(b.g_inv * xi_b);
  return std::sqrt(std::max(0.0, -q));
}

Vec assemble_covector(const ManifoldModel& model, const Vec& xb, const Vec& xi_b, double xi_n) {
  const Vec x = model.chart->embed(xb);
  const Mat j = model.chart->jacobian(xb);
  const int n = model.n;
  Mat frame(n, n);
  frame.leftCols(n - 1) = j;
  frame.col(n - 1) = inward_normal(model, x);
  Vec rhs(n);
  rhs.head(n - 1) = xi_b;
  rhs(n - 1) = xi_n;
  return frame.transpose().partialPivLu().solve(rhs);
}

PhasePoint lift_to_null(const ManifoldModel& model, const BoundaryCovector& bc, Side side) {
  if (bc.cls == CovectorClass::Elliptic) throw ClassificationError("elliptic covector has no null lift");
  double m = 0.0;
  if (bc.cls == CovectorClass::Hyperbolic) {
    m = lift_normal_magnitude(model, bc.base, bc.covec);
    if (side == Side::Outward) m = -m;
  }
  return {model.chart->embed(bc.base), assemble_covector(model, bc.base, bc.covec, m)};
}

BoundaryCovector tangential_project(const ManifoldModel& model, const PhasePoint& pp, const Vec* hint) {
  const double phi = model.bdefun(pp.x);
  if (std::abs(phi) > 1e-8 * model.chart_scale) throw DomainError("point is not on the boundary");
  const Vec xb = model.chart->locate(pp.x, hint);
  const Mat j = model.chart->jacobian(xb);
  const Vec xi_b = j.transpose() * pp.xi;
  return classify_covector(model, xb, xi_b);
}

double hp_bdefun(const ManifoldModel& model, const Vec& x, const Vec& xi) {
  const Mat gi = inverse_metric(model, x);
  return -2.0 * xi.dot(gi * model.bdefun.grad(x));
}

double hp2_bdefun(const ManifoldModel& model, const Vec& x, const Vec& xi) {
  const MetricEval m = metric_eval(model, x);
  const int n = model.n;
  const MatDerivs dgi = inverse_derivatives(m.g_inv, m.dg, n);
  const Vec dphi = model.bdefun.grad(x);
  const Mat hphi = model.bdefun.hess(x);
  const Vec v = m.g_inv * xi;
  const Vec w = m.g_inv * dphi;
  double t1 = v.dot(hphi * v);
  double t2 = 0.0, t3 = 0.0;
  for (int k = 0; k < n; ++k) {
    t2 += v(k) * xi.dot(dgi[k] * dphi);
    t3 += w(k) * xi.dot(dgi[k] * xi);
  }
  return 4.0 * (t1 + t2 - 0.5 * t3);
}

ConvexitySample null_convexity(const ManifoldModel& model, const Vec& xb, const Vec& v) {
  const BoundaryMetric b = boundary_metric(model, xb);
  const double vv = v.dot(b.g * v);
  if (std::abs(vv) > 1e-8 * v.squaredNorm() * b.g.cwiseAbs().maxCoeff())
    throw ClassificationError("boundary vector is not null");
  const Vec x = model.chart->embed(xb);
  const Mat j = model.chart->jacobian(xb);
  const Vec w = j * v;
  const MetricEval m = metric_eval(model, x);
  const Vec dphi = model.bdefun.grad(x);
  const double norm = std::sqrt(dphi.dot(m.g_inv * dphi));
  if (std::abs(dphi.dot(w)) > 1e-8 * norm * w.norm()) throw ClassificationError("vector not tangent to boundary");
  Mat hess = model.bdefun.hess(x);
  for (int k = 0; k < model.n; ++k) hess -= m.christoffel[k] * dphi(k);
  ConvexitySample s;
  s.second_fundamental_form = -w.dot(hess * w) / norm;
  // H_p^2 of the unit-normalized defining function; at a glancing lift the normalization
  // factor passes straight through because H_p phi_b = phi_b = 0 there.
  s.hp2_phi = hp2_bdefun(model, x, m.g * w) / norm;
  const double expected = -4.0 * s.second_fundamental_form;
  s.relative_mismatch = std::abs(s.hp2_phi - expected) / std::max(std::abs(expected), 1e-300);
  return s;
}

Mat boundary_covector_frame(const Mat& gbar_inv) {
  const auto m = gbar_inv.rows();
  Mat basis = Mat::Identity(m, m);
  if (!(gbar_inv(0, 0) < 0.0)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gbar_inv);
    basis.row(0) = es.eigenvectors().col(0).transpose();
    for (Eigen::Index a = 1; a < m; ++a) basis.row(a) = es.eigenvectors().col(a).transpose();
  }
  Mat f(m, m);
  Vec eta(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    Vec e = basis.row(a).transpose();
    for (Eigen::Index b = 0; b < a; ++b) {
      const Vec fb = f.row(b).transpose();
      e -= (e.dot(gbar_inv * fb) / eta(b)) * fb;
    }
    const double nn = e.dot(gbar_inv * e);
    eta(a) = nn < 0.0 ? -1.0 : 1.0;
    f.row(a) = (e / std::sqrt(std::abs(nn))).transpose();
  }
  return f;
}

std::vector<Vec> null_boundary_covectors(const ManifoldModel& model, const Vec& xb,
                                         const std::vector<double>& angles) {
  const BoundaryMetric b = boundary_metric(model, xb);
  const Mat f = boundary_covector_frame(b.g_inv);
  std::vector<Vec> out;
  const Vec f0 = f.row(0).transpose();
  if (model.n == 3) {
    const Vec f1 = f.row(1).transpose();
    out.push_back(-f0 + f1);
    out.push_back(-f0 - f1);
  } else {
    const Vec f1 = f.row(1).transpose();
    const Vec f2 = f.row(2).transpose();
    for (double a : angles) out.push_back(-f0 + std::cos(a) * f1 + std::sin(a) * f2);
  }
  return out;
}

std::vector<Vec> null_boundary_vectors(const ManifoldModel& model, const Vec& xb,
                                       const std::vector<double>& angles) {
  const BoundaryMetric b = boundary_metric(model, xb);
  std::vector<Vec> out;
  for (const Vec& c : null_boundary_covectors(model, xb, angles)) out.push_back(b.g_inv * c);
  return out;
}

AdmissibilityReport check_admissibility(const ManifoldModel& model, const std::vector<Vec>& grid,
                                        int directions) {
  AdmissibilityReport rep;
  rep.pass = !grid.empty();
  rep.min_second_fundamental_form = std::numeric_limits<double>::infinity();
  std::vector<double> angles;
  for (int i = 0; i < directions; ++i) angles.push_back(2.0 * std::numbers::pi * i / directions);
  for (const Vec& xb : grid) {
    AdmissibilityPoint pt;
    pt.xb = xb;
    const Vec x = model.chart->embed(xb);
    const Vec dtau = model.temporal.grad(x);
    pt.dtau_timelike = dtau.dot(inverse_metric(model, x) * dtau) < 0.0;
    const BoundaryMetric b = boundary_metric(model, xb);
    Eigen::SelfAdjointEigenSolver<Mat> es(b.g);
    const Vec ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    int neg = 0, small = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i)) <= 1e-12 * scale) ++small;
      else if (ev(i) < 0.0) ++neg;
    }
    pt.boundary_lorentzian = neg == 1 && small == 0;
    pt.min_second_fundamental_form = std::numeric_limits<double>::infinity();
    if (pt.boundary_lorentzian) {
      for (const Vec& v : null_boundary_vectors(model, xb, angles))
        pt.min_second_fundamental_form =
            std::min(pt.min_second_fundamental_form, null_convexity(model, xb, v).second_fundamental_form);
    }
    pt.convex = pt.min_second_fundamental_form > 0.0 && std::isfinite(pt.min_second_fundamental_form);
    rep.min_second_fundamental_form = std::min(rep.min_second_fundamental_form, pt.min_second_fundamental_form);
    rep.pass = rep.pass && pt.dtau_timelike && pt.boundary_lorentzian && pt.convex;
    rep.points.push_back(pt);
  }
  return rep;
}

SemiGeodesicChart::SemiGeodesicChart(const ManifoldModel& model, const Vec& xb0, double radius, int steps)
    : model_(&model), xb0_(xb0), radius_(radius), steps_(steps) {
  if (!(radius > 0.0)) throw DomainError("semi-geodesic radius must be positive");
  const int m = model.n - 1;
  std::vector<Vec> bases{xb0};
  const double off = 0.05 * model.chart_scale;
  for (int a = 0; a < m; ++a) {
    Vec p = xb0, q = xb0;
    p(a) += off;
    q(a) -= off;
    bases.push_back(p);
    bases.push_back(q);
  }
  constexpr int samples = 32;
  for (const Vec& xb : bases) {
    double det0 = 0.0;
    for (int i = 0; i <= samples; ++i) {
      const double s = radius * i / samples;
      const Mat d = chart_jacobian(xb, s);
      const Mat g = d.transpose() * model.metric(map(xb, s)) * d;
      if (i % 8 == 0) {
        residual_ = std::max(residual_, std::abs(g(m, m) - 1.0));
        for (int a = 0; a < m; ++a) residual_ = std::max(residual_, std::abs(g(a, m)));
      }
      const double det = d.determinant();
      if (i == 0) {
        det0 = det;
      } else if (det * det0 <= 0.0 || std::abs(det) < 1e-6 * std::abs(det0)) {
        throw CausticError("normal geodesics focus within the requested radius");
      }
    }
  }
}

std::pair<Vec, Vec> SemiGeodesicChart::shoot(const Vec& xb, double s) const {
  const ManifoldModel& model = *model_;
  const int n = model.n;
  Vec y(2 * n);
  y.head(n) = model.chart->embed(xb);
  y.tail(n) = inward_normal(model, y.head(n));
  auto rhs = [&](const Vec& st) {
    const MetricEval m = metric_eval(model, Vec(st.head(n)));
    Vec d(2 * n);
    d.head(n) = st.tail(n);
    for (int k = 0; k < n; ++k) d(n + k) = -st.tail(n).dot(m.christoffel[k] * st.tail(n));
    return d;
  };
  const double h = s / steps_;
  for (int i = 0; i < steps_ && h != 0.0; ++i) {
    const Vec k1 = rhs(y);
    const Vec k2 = rhs(Vec(y + 0.5 * h * k1));
    const Vec k3 = rhs(Vec(y + 0.5 * h * k2));
    const Vec k4 = rhs(Vec(y + h * k3));
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {y.head(n), y.tail(n)};
}

Vec SemiGeodesicChart::map(const Vec& xb, double s) const { return shoot(xb, s).first; }

Mat SemiGeodesicChart::pulled_back_metric(const Vec& xb, double s) const {
  const Mat d = chart_jacobian(xb, s);
  return d.transpose() * model_->metric(map(xb, s)) * d;
}

Mat SemiGeodesicChart::chart_jacobian(const Vec& xb, double s) const {
  const ManifoldModel& model = *model_;
  const int n = model.n;
  const double h = 1e-5 * model.chart_scale;
  Mat d(n, n);
  const Vec v = shoot(xb, s).second;
  for (int a = 0; a < n - 1; ++a) {
    Vec p = xb, q = xb;
    p(a) += h;
    q(a) -= h;
    d.col(a) = (shoot(p, s).first - shoot(q, s).first) / (2.0 * h);
  }
  d.col(n - 1) = v;
  return d;
}

SemiGeodesicChart semi_geodesic_chart(const ManifoldModel& model, const Vec& xb, double radius) {
  return SemiGeodesicChart(model, xb, radius);
}

}  // namespace nullglide
