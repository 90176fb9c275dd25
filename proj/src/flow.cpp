#include "nullglide/flow.hpp"

#include "nullglide/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nullglide {

namespace {

struct LocalMetric {
  Mat g_inv;
  MatDerivs dg;
};

LocalMetric local_metric(const ManifoldModel& model, const Vec& x) {
  check_domain(model, x);
  const Mat g = model.metric(x);
  const double det = g.determinant();
  if (!(std::abs(det) > 1e-12 * std::pow(g.cwiseAbs().maxCoeff(), static_cast<double>(model.n))))
    throw DomainError("singular metric");
  return {g.inverse(), model.metric.derivatives(x)};
}

// dy/ds for y = (x, xi, I) along sgn * H_p.
Vec phase_rhs(const ManifoldModel& model, const Vec& y, double sgn) {
  const int n = model.n;
  const Vec x = y.head(n);
  const Vec xi = y.segment(n, n);
  const LocalMetric m = local_metric(model, x);
  const Vec v = m.g_inv * xi;
  Vec out(2 * n + 1);
  out.head(n) = -2.0 * sgn * v;
  for (int l = 0; l < n; ++l) out(n + l) = -sgn * v.dot(m.dg[l] * v);
  out(2 * n) = model.oneform(x).dot(out.head(n));
  return out;
}

double shell_of(const ManifoldModel& model, const Vec& y) {
  const int n = model.n;
  const Vec xi = y.segment(n, n);
  const Mat gi = inverse_metric(model, y.head(n));
  return std::abs(xi.dot(gi * xi)) / xi.squaredNorm();
}

// Moves xi along d(tau) back onto p = 0.
bool reproject(const ManifoldModel& model, Vec& y) {
  const int n = model.n;
  const Vec x = y.head(n);
  const Vec xi = y.segment(n, n);
  const Mat gi = inverse_metric(model, x);
  const Vec d = model.temporal.grad(x);
  const double a = d.dot(gi * d), b = 2.0 * d.dot(gi * xi), c = xi.dot(gi * xi);
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0 || a == 0.0) return false;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double lam1 = q / a, lam2 = q != 0.0 ? c / q : lam1;
  const double lam = std::abs(lam1) < std::abs(lam2) ? lam1 : lam2;
  y.segment(n, n) = xi + lam * d;
  return true;
}

// Root of fn on [lo, hi] with fn(lo) > 0 > fn(hi).
double locate_root(const std::function<double(double)>& fn, double lo, double hi, double flo, double fhi,
                   double ftol, bool bisect) {
  double side = 0.0;
  double best = hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = bisect ? 0.5 * (lo + hi) : (lo * fhi - hi * flo) / (fhi - flo);
    const double fm = fn(mid);
    best = mid;
    if (std::abs(fm) <= ftol) break;
    if (fm < 0.0) {
      hi = mid;
      fhi = fm;
      if (side < 0.0) flo *= 0.5;
      side = -1.0;
    } else {
      lo = mid;
      flo = fm;
      if (side > 0.0) fhi *= 0.5;
      side = 1.0;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) {
      best = fm < 0.0 ? hi : lo;
      break;
    }
  }
  return best;
}

}  // namespace

PhaseVelocity hamiltonian_rhs(const ManifoldModel& model, const PhasePoint& pp) {
  Vec y(2 * model.n + 1);
  y.head(model.n) = pp.x;
  y.segment(model.n, model.n) = pp.xi;
  y(2 * model.n) = 0.0;
  const Vec f = phase_rhs(model, y, 1.0);
  return {f.head(model.n), f.segment(model.n, model.n)};
}

double forward_sign(Orientation o, bool forward) {
  if (o == Orientation::None) throw ClassificationError("covector has no time orientation");
  const double s = o == Orientation::Future ? -1.0 : 1.0;
  return forward ? s : -s;
}

std::array<LiftChoice, 4> enumerate_lift_choices(const ManifoldModel& model, const BoundaryCovector& bc) {
  std::array<LiftChoice, 4> out;
  int i = 0;
  for (Side side : {Side::Inward, Side::Outward}) {
    const PhasePoint pp = lift_to_null(model, bc, side);
    const PhaseVelocity v = hamiltonian_rhs(model, pp);
    for (double sgn : {-1.0, 1.0}) {
      LiftChoice c;
      c.side = side;
      c.sgn = sgn;
      c.enters_interior = sgn * model.bdefun.grad(pp.x).dot(v.xdot) > 0.0;
      c.causal_future = sgn * model.temporal.grad(pp.x).dot(v.xdot) > 0.0;
      out[i++] = c;
    }
  }
  return out;
}

ArcResult integrate_arc(const ManifoldModel& model, const PhasePoint& start, double sgn, double s0,
                        const TraceWindow& stop, const FlowOptions& opt, double a0) {
  const int n = model.n;
  const double tol = opt.tol_ode > 0.0 ? opt.tol_ode : model.tol.tol_ode;
  const double scale = model.chart_scale;
  Vec y0(2 * n + 1);
  y0.head(n) = start.x;
  y0.segment(n, n) = start.xi;
  y0(2 * n) = a0;
  const OdeRhs rhs = [&model, sgn](double, const Vec& y) { return phase_rhs(model, y, sgn); };
  const Vec f0 = rhs(s0, y0);
  const double speed = f0.head(n).norm();
  if (!(speed > 0.0)) throw TangencyError("zero velocity");

  const double phi0 = model.bdefun(start.x);
  const double dphi = model.bdefun.grad(start.x).dot(f0.head(n));
  const double on_boundary_tol = 1e-9 * scale;
  if (phi0 < -on_boundary_tol) throw DomainError("arc starts outside the manifold");
  const bool from_boundary = phi0 <= on_boundary_tol;
  ArcResult res;
  double first_cap = std::numeric_limits<double>::infinity();
  if (from_boundary) {
    const double xin = std::abs(normal_component(model, start.x, start.xi));
    res.arc.near_glancing = xin < 1e-6 * start.xi.norm();
    if (!(dphi > 0.0) || xin < 1e-14 * start.xi.norm())
      throw TangencyError("arc does not enter the interior (glancing or outward start)");
    const double d2 = hp2_bdefun(model, start.x, start.xi);
    if (d2 < 0.0) first_cap = 0.25 * 2.0 * dphi / std::abs(d2);
  }

  OdeOptions oo;
  oo.rtol = tol;
  oo.atol = tol;
  oo.h_max = opt.h_max_factor * scale / speed;
  oo.h_init = std::min(oo.h_max * 0.1, first_cap);
  oo.h_min = 1e-14 * scale / speed;
  DormandPrince45 ode(rhs, s0, y0, oo);
  res.arc.nodes.push_back({s0, y0, f0, shell_of(model, y0)});
  res.arc.max_shell_residual = res.arc.nodes.back().shell;

  const double ftol = model.tol.tol_event * scale;
  const double tau_slack = 1e-9 * std::max(1.0, scale);
  bool first = true;
  const bool reproj = opt.reproject && model.tol.reproject_shell;
  for (long iter = 0; iter < 50000000; ++iter) {
    double cap = stop.s_max - ode.s();
    if (first) cap = std::min(cap, first_cap);
    if (cap <= 0.0) {
      res.reason = StopReason::ParameterBound;
      return res;
    }
    const DenseStep& st = ode.step(cap);
    const int m = std::max(2, opt.dense_samples);
    double prev_phi = first ? std::max(phi0, 1e-300) : model.bdefun(st.y0.head(n));
    double prev_s = st.s0;
    int hit_kind = 0;  // 1 boundary, 2 tau
    double lo = 0.0, hi = 0.0, flo = 0.0, fhi = 0.0;
    double bound = 0.0;
    for (int i = 1; i <= m && hit_kind == 0; ++i) {
      const double si = i == m ? st.s0 + st.h : st.s0 + st.h * i / m;
      const Vec yi = i == m ? st.y1 : st.at(si);
      const double ph = model.bdefun(yi.head(n));
      const double ta = model.temporal(yi.head(n));
      if (ph < 0.0 && prev_phi > 0.0) {
        hit_kind = 1;
        lo = prev_s;
        hi = si;
        flo = prev_phi;
        fhi = ph;
      }
      if (ta > stop.tau_max + tau_slack || ta < stop.tau_min - tau_slack) {
        // A boundary hit in the same sub-interval wins only if it comes first; refine both.
        const double b = ta > stop.tau_max + tau_slack ? stop.tau_max + tau_slack : stop.tau_min - tau_slack;
        auto gtau = [&](double s) {
          const Vec y = DormandPrince45::trial(rhs, st.s0, st.y0, st.f0, s - st.s0);
          const double v = model.temporal(y.head(n)) - b;
          return b > stop.tau_min ? -v : v;
        };
        const double ttau = locate_root(gtau, prev_s, si, gtau(prev_s), gtau(si), 1e-14 * scale, false);
        if (hit_kind == 1) {
          auto gphi = [&](double s) {
            return model.bdefun(DormandPrince45::trial(rhs, st.s0, st.y0, st.f0, s - st.s0).head(n));
          };
          const double tphi = locate_root(gphi, lo, hi, flo, fhi, ftol, res.arc.near_glancing);
          if (tphi <= ttau) break;
        }
        hit_kind = 2;
        bound = ttau;
      }
      prev_phi = ph;
      prev_s = si;
    }
    first = false;
    if (hit_kind == 1) {
      auto gphi = [&](double s) {
        return model.bdefun(DormandPrince45::trial(rhs, st.s0, st.y0, st.f0, s - st.s0).head(n));
      };
      const double se = locate_root(gphi, lo, hi, flo, fhi, ftol, res.arc.near_glancing);
      const Vec ye = DormandPrince45::trial(rhs, st.s0, st.y0, st.f0, se - st.s0);
      res.arc.nodes.push_back({se, ye, rhs(se, ye), shell_of(model, ye)});
      res.arc.max_shell_residual = std::max(res.arc.max_shell_residual, res.arc.nodes.back().shell);
      res.exit = PhasePoint{ye.head(n), ye.segment(n, n)};
      res.exit_s = se;
      res.exit_a_integral = ye(2 * n);
      res.reason = StopReason::BoundaryHit;
      return res;
    }
    if (hit_kind == 2) {
      const Vec ye = DormandPrince45::trial(rhs, st.s0, st.y0, st.f0, bound - st.s0);
      res.arc.nodes.push_back({bound, ye, rhs(bound, ye), shell_of(model, ye)});
      res.arc.max_shell_residual = std::max(res.arc.max_shell_residual, res.arc.nodes.back().shell);
      res.exit_s = bound;
      res.exit_a_integral = ye(2 * n);
      res.reason = StopReason::TemporalBound;
      return res;
    }
    Vec y = ode.y();
    double sh = shell_of(model, y);
    if (reproj && sh > 0.1 * model.tol.tol_shell) {
      if (reproject(model, y)) {
        ode.reset_state(y);
        ++res.arc.reprojections;
        sh = shell_of(model, y);
      }
    }
    res.arc.nodes.push_back({ode.s(), ode.y(), ode.f(), sh});
    res.arc.max_shell_residual = std::max(res.arc.max_shell_residual, sh);
    if (ode.s() >= stop.s_max) {
      res.exit_s = ode.s();
      res.exit_a_integral = ode.y()(2 * n);
      res.reason = StopReason::ParameterBound;
      return res;
    }
  }
  throw TangencyError("step budget exhausted");
}

PhasePoint reflect(const ManifoldModel& model, const PhasePoint& pp) {
  const Mat g = model.metric(pp.x);
  const Vec nrm = inward_normal(model, pp.x);
  const double a = pp.xi.dot(nrm);
  if (std::abs(a) <= 1e-14 * pp.xi.norm()) throw TangencyError("glancing reflection event");
  return {pp.x, pp.xi - 2.0 * a * (g * nrm)};
}

BrokenTrajectory trace_broken(const ManifoldModel& model, const BoundaryCovector& source,
                              const TraceWindow& window, const FlowOptions& opt) {
  if (source.cls != CovectorClass::Hyperbolic) throw ClassificationError("broken trace needs a hyperbolic source");
  Orientation o = source.orientation;
  if (o == Orientation::None) o = orientation_of(model, source.base, source.covec);
  BrokenTrajectory tr;
  tr.source = source;
  tr.source.orientation = o;
  tr.window = window;
  tr.sgn = forward_sign(o, window.forward);
  const Side side = tr.sgn < 0.0 ? Side::Inward : Side::Outward;
  PhasePoint pp = lift_to_null(model, tr.source, side);
  double s = 0.0, a = 0.0;
  Vec hint = source.base;
  while (true) {
    ArcResult ar = integrate_arc(model, pp, tr.sgn, s, window, opt, a);
    tr.max_shell_residual = std::max(tr.max_shell_residual, ar.arc.max_shell_residual);
    tr.reprojections += ar.arc.reprojections;
    tr.near_glancing = tr.near_glancing || ar.arc.near_glancing;
    tr.arcs.push_back(std::move(ar.arc));
    if (ar.reason != StopReason::BoundaryHit) {
      tr.reason = ar.reason;
      tr.truncated = true;
      return tr;
    }
    ReflectionEvent ev;
    ev.k = static_cast<int>(tr.events.size()) + 1;
    ev.s = ar.exit_s;
    ev.xb = model.chart->locate(ar.exit->x, &hint);
    const Vec xb_exact = model.chart->embed(ev.xb);
    ev.incoming = {xb_exact, ar.exit->xi};
    ev.outgoing = reflect(model, ev.incoming);
    const Mat j = model.chart->jacobian(ev.xb);
    ev.covector = classify_covector(model, ev.xb, Vec(j.transpose() * ev.incoming.xi));
    ev.xi_n = std::abs(normal_component(model, xb_exact, ev.incoming.xi));
    ev.tau = model.temporal(xb_exact);
    ev.a_integral = ar.exit_a_integral;
    hint = ev.xb;
    tr.events.push_back(ev);
    if (static_cast<int>(tr.events.size()) >= window.max_events) {
      tr.reason = StopReason::EventLimit;
      return tr;
    }
    pp = ev.outgoing;
    s = ev.s;
    a = ev.a_integral;
  }
}

GlidingSample GlidingRay::at(double s) const {
  if (nodes.empty()) throw DataError("empty gliding ray");
  auto it = std::upper_bound(nodes.begin(), nodes.end(), s, [](double v, const ArcNode& a) { return v < a.s; });
  if (it == nodes.begin()) it = nodes.begin() + 1;
  if (it == nodes.end()) it = nodes.end() - 1;
  const ArcNode& b = *it;
  const ArcNode& a = *(it - 1);
  const double h = b.s - a.s;
  const double t = (s - a.s) / h;
  const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
  const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
  const Vec y = h00 * a.y + h10 * h * a.dy + h01 * b.y + h11 * h * b.dy;
  const int m = static_cast<int>((y.size() - 1) / 2);
  return {s, y.head(m), y.segment(m, m), y(2 * m)};
}

namespace {

Vec gliding_rhs(const ManifoldModel& model, const Vec& y, double sgn) {
  const int m = model.n - 1;
  const Vec xb = y.head(m);
  const Vec xi = y.segment(m, m);
  const BoundaryMetric b = boundary_metric(model, xb);
  const Vec v = b.g_inv * xi;
  Vec out(2 * m + 1);
  out.head(m) = -2.0 * sgn * v;
  for (int a = 0; a < m; ++a) out(m + a) = -sgn * v.dot(b.dg[a] * v);
  const Vec A = model.chart->jacobian(xb).transpose() * model.oneform(model.chart->embed(xb));
  out(2 * m) = A.dot(out.head(m));
  return out;
}

template <class Emit>
void run_boundary_ode(const ManifoldModel& model, const OdeRhs& rhs, const Vec& y0, const TraceWindow& window,
                      const FlowOptions& opt, const std::vector<double>& grid, int m, Emit emit,
                      std::vector<ArcNode>* nodes) {
  const double tol = opt.tol_ode > 0.0 ? opt.tol_ode : model.tol.tol_ode;
  const Vec f0 = rhs(0.0, y0);
  const double speed = f0.head(m).norm();
  OdeOptions oo;
  oo.rtol = tol;
  oo.atol = tol;
  oo.h_max = opt.h_max_factor * model.chart_scale / speed;
  oo.h_init = 0.1 * oo.h_max;
  oo.h_min = 1e-14 * model.chart_scale / speed;
  DormandPrince45 ode(rhs, 0.0, y0, oo);
  if (nodes) nodes->push_back({0.0, y0, f0, 0.0});
  std::size_t gi = 0;
  if (grid.empty()) emit(0.0, y0);
  while (gi < grid.size() && grid[gi] <= 0.0) emit(grid[gi++], y0);
  auto tau_of = [&](const Vec& y) { return model.temporal(model.chart->embed(y.head(m))); };
  const double s_end = grid.empty() ? window.s_max : std::min(window.s_max, grid.back());
  while (ode.s() < s_end) {
    const DenseStep& st = ode.step(s_end - ode.s());
    const double tau = tau_of(st.y1);
    const bool out_of_window = tau > window.tau_max || tau < window.tau_min;
    if (nodes) nodes->push_back({ode.s(), ode.y(), ode.f(), 0.0});
    if (grid.empty()) {
      if (!out_of_window) emit(ode.s(), ode.y());
    } else {
      while (gi < grid.size() && grid[gi] <= st.s0 + st.h) {
        const Vec y = grid[gi] >= st.s0 + st.h ? st.y1 : st.at(grid[gi]);
        if (tau_of(y) > window.tau_max || tau_of(y) < window.tau_min) break;
        emit(grid[gi++], y);
      }
    }
    if (out_of_window) break;
  }
}

}  // namespace

GlidingRay trace_gliding(const ManifoldModel& model, const BoundaryCovector& source, const TraceWindow& window,
                         const FlowOptions& opt, const std::vector<double>& output_grid) {
  if (source.cls != CovectorClass::Glancing) throw ClassificationError("gliding ray needs a glancing source");
  Orientation o = source.orientation;
  if (o == Orientation::None) o = orientation_of(model, source.base, source.covec);
  GlidingRay ray;
  ray.forward = window.forward;
  ray.sgn = forward_sign(o, window.forward);
  const int m = model.n - 1;
  Vec y0(2 * m + 1);
  y0.head(m) = source.base;
  y0.segment(m, m) = source.covec;
  y0(2 * m) = 0.0;
  const double sgn = ray.sgn;
  const OdeRhs rhs = [&model, sgn](double, const Vec& y) { return gliding_rhs(model, y, sgn); };
  const double norm0 = source.covec.squaredNorm();
  run_boundary_ode(
      model, rhs, y0, window, opt, output_grid, m,
      [&](double s, const Vec& y) {
        GlidingSample g{s, y.head(m), y.segment(m, m), y(2 * m)};
        const BoundaryMetric b = boundary_metric(model, g.xb);
        ray.max_shell_residual = std::max(ray.max_shell_residual, std::abs(g.xi_b.dot(b.g_inv * g.xi_b)) / norm0);
        ray.samples.push_back(std::move(g));
      },
      &ray.nodes);
  return ray;
}

BoundaryCurve boundary_null_geodesic(const ManifoldModel& model, const Vec& xb, const Vec& v,
                                     const TraceWindow& window, const FlowOptions& opt,
                                     const std::vector<double>& output_grid) {
  const int m = model.n - 1;
  const BoundaryMetric b0 = boundary_metric(model, xb);
  if (std::abs(v.dot(b0.g * v)) > 1e-8 * v.squaredNorm() * b0.g.cwiseAbs().maxCoeff())
    throw ClassificationError("initial vector is not null for the boundary metric");
  const OdeRhs rhs = [&model, m](double, const Vec& y) {
    const Vec x = y.head(m);
    const Vec u = y.segment(m, m);
    const BoundaryMetric b = boundary_metric(model, x);
    Vec out = Vec::Zero(2 * m + 1);
    out.head(m) = u;
    // Gamma^c_ab u^a u^b = g^{cd} (d_a g_db u^a u^b - 1/2 d_d g_ab u^a u^b)
    Vec lower(m);
    Mat du = Mat::Zero(m, m);
    for (int a = 0; a < m; ++a) du += b.dg[a] * u(a);
    for (int d = 0; d < m; ++d) lower(d) = (du * u)(d) - 0.5 * u.dot(b.dg[d] * u);
    out.segment(m, m) = -(b.g_inv * lower);
    return out;
  };
  Vec y0 = Vec::Zero(2 * m + 1);
  y0.head(m) = xb;
  y0.segment(m, m) = v;
  BoundaryCurve curve;
  run_boundary_ode(
      model, rhs, y0, window, opt, output_grid, m,
      [&](double s, const Vec& y) { curve.samples.push_back({s, y.head(m), y.segment(m, m)}); }, nullptr);
  return curve;
}

double gliding_geodesic_deviation(const ManifoldModel& model, const BoundaryCovector& source, double length,
                                  const FlowOptions& opt, int grid_points) {
  Orientation o = source.orientation;
  if (o == Orientation::None) o = orientation_of(model, source.base, source.covec);
  const double sgn = forward_sign(o, true);
  const BoundaryMetric b0 = boundary_metric(model, source.base);
  // Normalize so that tau advances at unit rate initially.
  Vec v0 = -2.0 * sgn * (b0.g_inv * source.covec);
  const Vec dtau = model.chart->jacobian(source.base).transpose() *
                   model.temporal.grad(model.chart->embed(source.base));
  const double rate = dtau.dot(v0);
  BoundaryCovector src = source;
  src.orientation = o;
  src.covec = source.covec / rate;
  v0 /= rate;
  std::vector<double> grid;
  for (int i = 0; i <= grid_points; ++i) grid.push_back(length * i / grid_points);
  TraceWindow w;
  const GlidingRay ray = trace_gliding(model, src, w, opt, grid);
  const BoundaryCurve curve = boundary_null_geodesic(model, src.base, v0, w, opt, grid);
  if (ray.samples.size() != curve.samples.size()) throw DataError("gliding comparison grids differ");
  double dev = 0.0;
  for (std::size_t i = 0; i < ray.samples.size(); ++i) {
    const auto& g = ray.samples[i];
    const auto& c = curve.samples[i];
    const BoundaryMetric b = boundary_metric(model, c.xb);
    const Vec xi = -0.5 * sgn * (b.g * c.v);
    dev = std::max(dev, std::sqrt((g.xb - c.xb).squaredNorm() + (g.xi_b - xi).squaredNorm()));
  }
  return dev;
}

Vec hyperbolic_transversal(const ManifoldModel& model, const Vec& xb, const Vec& xi_null) {
  const BoundaryMetric b = boundary_metric(model, xb);
  const Mat f = boundary_covector_frame(b.g_inv);
  const Vec f0 = f.row(0).transpose();
  return xi_null.dot(b.g_inv * f0) > 0.0 ? Vec(-f0) : f0;
}

double phase_distance(const Vec& xa, const Vec& xia, const Vec& xb, const Vec& xib) {
  return std::sqrt((xa - xb).squaredNorm() + (xia / xia.norm() - xib / xib.norm()).squaredNorm());
}

ConvergenceTable convergence_probe(const ManifoldModel& model, const BoundaryCovector& glancing,
                                   const std::vector<double>& eps, double window_t, const FlowOptions& opt,
                                   const Vec* transversal) {
  ConvergenceTable table;
  table.source_xb = glancing.base;
  table.source_xi = glancing.covec;
  table.transversal = transversal ? *transversal : hyperbolic_transversal(model, glancing.base, glancing.covec);
  const double tau0 = model.temporal(model.chart->embed(glancing.base));
  FlowOptions fine = opt;
  fine.h_max_factor = std::min(opt.h_max_factor, 0.01);
  TraceWindow gw;
  gw.tau_max = tau0 + 1.5 * window_t;
  const GlidingRay ray = trace_gliding(model, glancing, gw, fine);
  auto nearest = [&](const Vec& xb, const Vec& xi, double& s_best) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ib = 0;
    for (std::size_t i = 0; i < ray.nodes.size(); ++i) {
      const int m = model.n - 1;
      const double d = phase_distance(xb, xi, ray.nodes[i].y.head(m), ray.nodes[i].y.segment(m, m));
      if (d < best) {
        best = d;
        ib = i;
      }
    }
    double lo = ray.nodes[ib > 0 ? ib - 1 : 0].s;
    double hi = ray.nodes[std::min(ib + 1, ray.nodes.size() - 1)].s;
    auto dist = [&](double s) {
      const GlidingSample g = ray.at(s);
      return phase_distance(xb, xi, g.xb, g.xi_b);
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = dist(c), fd = dist(d);
    for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = dist(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = dist(d);
      }
    }
    s_best = 0.5 * (lo + hi);
    return std::min(best, dist(s_best));
  };
  for (double e : eps) {
    ConvergenceRow row;
    row.eps = e;
    if (e == 0.0) {
      row.distance = 0.0;
      for (std::size_t i = 0; i < ray.samples.size(); i += 16) {
        double sb = 0.0;
        row.event_distance.push_back(nearest(ray.samples[i].xb, ray.samples[i].xi_b, sb));
        row.nearest_parameter.push_back(sb);
        row.distance = std::max(row.distance, row.event_distance.back());
      }
      row.events = static_cast<int>(row.event_distance.size());
      table.rows.push_back(row);
      continue;
    }
    const BoundaryCovector src =
        classify_covector(model, glancing.base, Vec(glancing.covec + e * table.transversal));
    TraceWindow w;
    w.tau_max = tau0 + window_t;
    const BrokenTrajectory tr = trace_broken(model, src, w, opt);
    row.events = static_cast<int>(tr.events.size());
    row.distance = row.events ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    for (const auto& ev : tr.events) {
      double sb = 0.0;
      row.event_distance.push_back(nearest(ev.xb, ev.covector.covec, sb));
      row.nearest_parameter.push_back(sb);
      row.distance = std::max(row.distance, row.event_distance.back());
    }
    table.rows.push_back(row);
  }
  return table;
}

void write_trajectory_csv(std::ostream& os, int traj_id, const BrokenTrajectory& tr, bool header) {
  const int n = static_cast<int>(tr.source.base.size()) + 1;
  if (header) {
    os << "traj_id,arc_id,s";
    for (int i = 0; i < n; ++i) os << ",x" << i;
    for (int i = 0; i < n; ++i) os << ",xi" << i;
    os << ",p_residual\n";
  }
  for (std::size_t a = 0; a < tr.arcs.size(); ++a)
    for (const auto& nd : tr.arcs[a].nodes)
      os << traj_id << ',' << a << ',' << num(nd.s) << ',' << num_list(nd.y.head(n)) << ','
         << num_list(nd.y.segment(n, n)) << ',' << num(nd.shell) << '\n';
}

void write_event_csv(std::ostream& os, int traj_id, const BrokenTrajectory& tr, bool header) {
  const int m = static_cast<int>(tr.source.base.size());
  if (header) {
    os << "traj_id,k,s_k";
    for (int i = 0; i < m; ++i) os << ",xb" << i;
    for (int i = 0; i < m; ++i) os << ",xib" << i;
    os << ",xi_n,tau\n";
  }
  for (const auto& ev : tr.events)
    os << traj_id << ',' << ev.k << ',' << num(ev.s) << ',' << num_list(ev.xb) << ','
       << num_list(ev.covector.covec) << ',' << num(ev.xi_n) << ',' << num(ev.tau) << '\n';
}

void write_gliding_csv(std::ostream& os, int traj_id, const GlidingRay& ray, bool header) {
  if (ray.samples.empty()) return;
  const int m = static_cast<int>(ray.samples.front().xb.size());
  if (header) {
    os << "traj_id,s";
    for (int i = 0; i < m; ++i) os << ",xb" << i;
    for (int i = 0; i < m; ++i) os << ",xib" << i;
    os << ",a_integral\n";
  }
  for (const auto& g : ray.samples)
    os << traj_id << ',' << num(g.s) << ',' << num_list(g.xb) << ',' << num_list(g.xi_b) << ','
       << num(g.a_integral) << '\n';
}

}  // namespace nullglide
