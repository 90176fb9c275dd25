#include "nullglide/dnsynth.hpp"

#include "nullglide/io.hpp"
#include "nullglide/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace nullglide {

const char* to_string(ProbeResponse r) {
  switch (r) {
    case ProbeResponse::Empty: return "Empty";
    case ProbeResponse::Discrete: return "Discrete";
    case ProbeResponse::Curve: return "Curve";
  }
  return "?";
}

ProbeResponse parse_response(const std::string& s) {
  if (s == "Empty") return ProbeResponse::Empty;
  if (s == "Discrete") return ProbeResponse::Discrete;
  if (s == "Curve") return ProbeResponse::Curve;
  throw DataError("unknown probe response '" + s + "'");
}

namespace {

constexpr double kGaussX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
constexpr double kGaussW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};

// Integral of A(x) dx/ds over the Hermite interpolant of nodes a, b; m position entries.
template <class Form>
double hermite_segment(const ArcNode& a, const ArcNode& b, int m, Form&& form) {
  const double h = b.s - a.s;
  if (h == 0.0) return 0.0;
  const Vec p0 = a.y.head(m), p1 = b.y.head(m), d0 = a.dy.head(m), d1 = b.dy.head(m);
  double sum = 0.0;
  for (int q = 0; q < 5; ++q) {
    const double u = 0.5 * (kGaussX[q] + 1.0);
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    const double g00 = 6 * u * u - 6 * u, g10 = 3 * u * u - 4 * u + 1, g01 = -6 * u * u + 6 * u,
                 g11 = 3 * u * u - 2 * u;
    const Vec x = h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1;
    const Vec v = (g00 * p0 + g01 * p1) / h + g10 * d0 + g11 * d1;
    sum += kGaussW[q] * form(x, v);
  }
  return 0.5 * h * sum;
}

// Spatial acceleration d2x/ds2 at a node; the flow sign enters squared, so the forward field suffices.
Vec node_acceleration(const ManifoldModel& model, const ArcNode& nd) {
  const int n = model.n;
  const PhasePoint p{nd.y.head(n), nd.y.segment(n, n)};
  const PhaseVelocity v = hamiltonian_rhs(model, p);
  const double scale = std::max(v.xdot.norm(), 1e-300);
  const double d = 1e-5 / scale;
  const PhaseVelocity vp = hamiltonian_rhs(model, {p.x + d * v.xdot, p.xi + d * v.xidot});
  const PhaseVelocity vm = hamiltonian_rhs(model, {p.x - d * v.xdot, p.xi - d * v.xidot});
  return (vp.xdot - vm.xdot) / (2.0 * d);
}

// Quintic Hermite version of hermite_segment using node accelerations.
template <class Form>
double quintic_segment(const ArcNode& a, const ArcNode& b, const Vec& acc0, const Vec& acc1, int m, Form&& form) {
  const double h = b.s - a.s;
  if (h == 0.0) return 0.0;
  const Vec p0 = a.y.head(m), p1 = b.y.head(m), v0 = a.dy.head(m), v1 = b.dy.head(m);
  double sum = 0.0;
  for (int q = 0; q < 5; ++q) {
    const double u = 0.5 * (kGaussX[q] + 1.0);
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    const double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5, H1 = u - 6 * u3 + 8 * u4 - 3 * u5,
                 H2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5), H3 = 0.5 * (u3 - 2 * u4 + u5),
                 H4 = -4 * u3 + 7 * u4 - 3 * u5, H5 = 10 * u3 - 15 * u4 + 6 * u5;
    const double D0 = -30 * u2 + 60 * u3 - 30 * u4, D1 = 1 - 18 * u2 + 32 * u3 - 15 * u4,
                 D2 = 0.5 * (2 * u - 9 * u2 + 12 * u3 - 5 * u4), D3 = 0.5 * (3 * u2 - 8 * u3 + 5 * u4),
                 D4 = -12 * u2 + 28 * u3 - 15 * u4, D5 = 30 * u2 - 60 * u3 + 30 * u4;
    const Vec x = H0 * p0 + H1 * h * v0 + H2 * h * h * acc0 + H3 * h * h * acc1 + H4 * h * v1 + H5 * p1;
    const Vec v = (D0 * p0 + D5 * p1) / h + D1 * v0 + D4 * v1 + h * (D2 * acc0 + D3 * acc1);
    sum += kGaussW[q] * form(x, v);
  }
  return 0.5 * h * sum;
}

template <class Form>
double integrate_nodes(const std::vector<ArcNode>& nodes, int m, int stride, Form&& form) {
  if (nodes.size() < 2) return 0.0;
  stride = std::max(1, stride);
  double total = 0.0;
  std::size_t i = 0;
  while (i + 1 < nodes.size()) {
    const std::size_t j = std::min(nodes.size() - 1, i + static_cast<std::size_t>(stride));
    total += hermite_segment(nodes[i], nodes[j], m, form);
    i = j;
  }
  return total;
}

double orientation_sign(Orientation o) {
  if (o == Orientation::None) throw ClassificationError("source has no time orientation");
  return o == Orientation::Past ? 1.0 : -1.0;
}

std::complex<double> assemble_q(double sign, int k, double a_integral, double modulus) {
  const double parity = (k % 2 == 0) ? 1.0 : -1.0;
  // modulus already carries the factor 2.
  return sign * parity * modulus * std::complex<double>(0.0, 1.0) * std::polar(1.0, a_integral);
}

}  // namespace

double line_integral_A(const ManifoldModel& model, const BrokenTrajectory& tr, int upto_event, int stride) {
  if (!model.oneform.components) throw DomainError("one-form undefined on the chart");
  const std::size_t arcs = upto_event < 0 ? tr.arcs.size() : std::min<std::size_t>(tr.arcs.size(), upto_event);
  auto form = [&](const Vec& x, const Vec& v) {
    check_domain(model, x);
    return model.oneform(x).dot(v);
  };
  stride = std::max(1, stride);
  double total = 0.0;
  for (std::size_t a = 0; a < arcs; ++a) {
    const auto& nodes = tr.arcs[a].nodes;
    if (nodes.size() < 2) continue;
    std::size_t i = 0;
    Vec acc_i = node_acceleration(model, nodes[0]);
    while (i + 1 < nodes.size()) {
      const std::size_t j = std::min(nodes.size() - 1, i + static_cast<std::size_t>(stride));
      const Vec acc_j = node_acceleration(model, nodes[j]);
      total += quintic_segment(nodes[i], nodes[j], acc_i, acc_j, model.n, form);
      i = j;
      acc_i = acc_j;
    }
  }
  return total;
}

double line_integral_A(const ManifoldModel& model, const GlidingRay& ray, int stride) {
  if (!model.oneform.components) throw DomainError("one-form undefined on the chart");
  auto form = [&](const Vec& xb, const Vec& v) {
    const Vec x = model.chart->embed(xb);
    return model.oneform(x).dot(model.chart->jacobian(xb) * v);
  };
  return integrate_nodes(ray.nodes, model.n - 1, stride, form);
}

double transfer_modulus(const ManifoldModel& model, const Vec& x0, double xi_n0, const Vec& xk, double xi_nk) {
  const double d0 = std::abs(boundary_metric(model, x0).det);
  const double dk = std::abs(boundary_metric(model, xk).det);
  return 2.0 * std::sqrt(std::abs(xi_n0 * xi_nk)) * std::pow(d0, 0.25) * std::pow(dk, -0.25);
}

std::complex<double> transfer_coefficient(const ManifoldModel& model, const BoundaryCovector& source,
                                          const ReflectionEvent& ev, TransferTruth* truth) {
  TransferTruth t;
  t.k = ev.k;
  t.sign = orientation_sign(source.orientation);
  t.a_integral = ev.a_integral;
  t.xi_n0 = lift_normal_magnitude(model, source.base, source.covec);
  t.xi_nk = ev.xi_n;
  t.tau = ev.tau;
  const double mod = transfer_modulus(model, source.base, t.xi_n0, ev.xb, t.xi_nk);
  if (truth) *truth = t;
  return assemble_q(t.sign, t.k, t.a_integral, mod);
}

std::vector<MeasurementRecord> Measurements::records() const {
  std::vector<MeasurementRecord> out;
  for (const auto& p : probes)
    for (const auto& h : p.hits) out.push_back({p.source, h.hit, h.Q, h.truth});
  return out;
}

std::vector<double> default_glancing_angles(int n) {
  if (n == 3) return {};
  std::vector<double> a;
  for (double base : {0.5 * std::numbers::pi, 1.5 * std::numbers::pi})
    for (int k = -2; k <= 2; ++k) a.push_back(base + k * std::numbers::pi / 6.0);
  return a;
}

std::vector<Vec> polarization_set(const std::vector<Vec>& basis) {
  std::vector<Vec> out(basis.begin(), basis.end());
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = a + 1; b < basis.size(); ++b) out.push_back(basis[a] + basis[b]);
  return out;
}

namespace {

std::vector<double> rounded_key(const Vec& b, const Vec& c) {
  std::vector<double> k;
  for (Eigen::Index i = 0; i < b.size(); ++i) k.push_back(std::round(b(i) * 1e9));
  for (Eigen::Index i = 0; i < c.size(); ++i) k.push_back(std::round(c(i) * 1e9));
  return k;
}


std::vector<Vec> fan_directions(int m, int count) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  if (m == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * (i + 0.5) / count;
      out.push_back(make_vec({std::cos(a), std::sin(a)}));
    }
    return out;
  }
  // Fibonacci points on the unit sphere.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    out.push_back(make_vec({z, r * std::cos(golden * i), r * std::sin(golden * i)}));
  }
  return out;
}

std::optional<BoundaryCovector> backward_to_region(const ManifoldModel& model, const Vec& y, const Vec& eta,
                                                   const Region& R, const TraceWindow& window,
                                                   const FlowOptions& opt) {
  const BoundaryCovector bc = classify_covector(model, y, eta);
  if (bc.cls != CovectorClass::Hyperbolic) throw ClassificationError("target covector is not hyperbolic");
  TraceWindow w;
  w.forward = false;
  w.tau_min = window.tau_min;
  w.max_events = 64;
  const BrokenTrajectory tr = trace_broken(model, bc, w, opt);
  for (const auto& ev : tr.events)
    if (R.contains(ev.xb) && ev.covector.cls == CovectorClass::Hyperbolic) {
      BoundaryCovector c = ev.covector;
      c.base = R.canonical(c.base);
      return c;
    }
  return std::nullopt;
}

}  // namespace

std::vector<Probe> make_probe_plan(const ManifoldModel& model, const Region& U, const Region& V,
                                   const ProbeDesign& design, const TraceWindow& window) {
  if (!regions_disjoint(U, V)) throw Error("U and V must be disjoint");
  const int m = model.n - 1;
  std::vector<Probe> plan;
  std::vector<Vec> bases;
  if (!design.base_counts.empty()) {
    if (static_cast<int>(design.base_counts.size()) != m) throw Error("base_counts needs one entry per boundary axis");
    bases = U.grid(design.base_counts, design.inset);
  }
  const std::vector<Vec> fan = fan_directions(m, design.fan);
  std::vector<double> angles = design.glancing_angles;
  if (angles.empty()) angles = default_glancing_angles(model.n);
  for (const Vec& xb : bases) {
    for (const Vec& d : fan) plan.push_back({xb, d, "grid"});
    if (!design.glancing) continue;
    for (const Vec& g : null_boundary_covectors(model, xb, angles)) {
      plan.push_back({xb, g, "glancing"});
      const Vec zeta = hyperbolic_transversal(model, xb, g);
      for (double e : design.eps) plan.push_back({xb, Vec(g + e * zeta), "eps"});
    }
  }
  for (const TargetSpec& t : design.hit_targets) {
    for (const Vec& eta : polarization_set(t.basis)) {
      const auto src = backward_to_region(model, t.point, eta, U, window, {});
      if (src) plan.push_back({src->base, src->covec, "target"});
    }
  }
  for (const TargetSpec& t : design.source_targets)
    for (const Vec& eta : polarization_set(t.basis)) plan.push_back({t.point, eta, "target"});
  return plan;
}

ClassifyDetail probe_classify_detail(const ManifoldModel& model, const Region& U, const Region& V, const Vec& xb,
                                     const Vec& xi, const TraceWindow& window, const std::vector<double>& eps,
                                     const FlowOptions& opt) {
  (void)U;
  ClassifyDetail out;
  const BoundaryCovector bc = classify_covector(model, xb, xi);
  if (bc.cls == CovectorClass::Elliptic) return out;
  if (bc.cls == CovectorClass::Hyperbolic) {
    const BrokenTrajectory tr = trace_broken(model, bc, window, opt);
    for (const auto& ev : tr.events)
      if (V.contains(ev.xb)) {
        out.response = ProbeResponse::Discrete;
        break;
      }
    return out;
  }
  // Glancing: hit sets of eps-perturbed hyperbolic probes must accumulate along one curve in T*V.
  std::vector<double> levels = eps;
  std::sort(levels.begin(), levels.end(), std::greater<>());
  if (levels.size() < 3) throw Error("curve classification needs three eps levels");
  const Vec zeta = hyperbolic_transversal(model, xb, xi);
  const int m = static_cast<int>(xb.size());
  const Vec per = model.chart->periods();
  std::vector<std::vector<Vec>> feats(levels.size());
  std::optional<Vec> ref;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    BrokenTrajectory tr;
    try {
      tr = trace_broken(model, classify_covector(model, xb, Vec(xi + levels[l] * zeta)), window, opt);
    } catch (const TangencyError&) {
      continue;
    }
    for (const auto& ev : tr.events) {
      if (!V.contains(ev.xb)) continue;
      Vec b = ev.xb;
      if (!ref) ref = b;
      for (int i = 0; i < m; ++i)
        if (per(i) > 0.0) b(i) = (*ref)(i) + std::remainder(b(i) - (*ref)(i), per(i));
      Vec f(2 * m);
      f << b, ev.covector.covec / ev.covector.covec.norm();
      feats[l].push_back(f);
    }
    out.level_hits.push_back(static_cast<int>(feats[l].size()));
  }
  if (out.level_hits.size() < levels.size()) return out;
  for (const auto& f : feats)
    if (f.size() < 5) return out;
  // Distance of every level's features to the polyline through the finest level, split where
  // consecutive fine hits are far apart (separate passes through V).
  std::vector<Vec> fine = feats.back();
  std::sort(fine.begin(), fine.end(), [](const Vec& p, const Vec& q) { return p(0) < q(0); });
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < fine.size(); ++i) gaps.push_back((fine[i + 1] - fine[i]).norm());
  std::vector<double> sorted_gaps = gaps;
  std::sort(sorted_gaps.begin(), sorted_gaps.end());
  const double gap_limit = 3.0 * sorted_gaps[sorted_gaps.size() / 2];
  auto polyline_distance = [&](const Vec& f) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fine.size(); ++i) {
      best = std::min(best, (f - fine[i]).norm());
      if (i + 1 == fine.size() || gaps[i] > gap_limit) continue;
      const Vec d = fine[i + 1] - fine[i];
      const double u = std::clamp((f - fine[i]).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (f - fine[i] - u * d).norm());
    }
    return best;
  };
  // Only features inside the chart-axis-0 span of a run are compared; the runs end where the
  // finest trajectory leaves V or the window, which coarser levels reach at slightly different times.
  std::vector<std::pair<double, double>> runs;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    if (i == 0 || gaps[i - 1] > gap_limit) runs.push_back({fine[i](0), fine[i](0)});
    runs.back().second = fine[i](0);
  }
  auto covered = [&](const Vec& f) {
    for (const auto& [lo, hi] : runs)
      if (f(0) >= lo && f(0) <= hi) return true;
    return false;
  };
  for (std::size_t l = 0; l + 1 < feats.size(); ++l) {
    double d = 0.0;
    int used = 0;
    for (const auto& f : feats[l])
      if (covered(f)) {
        d = std::max(d, polyline_distance(f));
        ++used;
      }
    if (used < 3) return out;
    out.level_distance.push_back(d);
  }
  bool decreasing = true;
  for (std::size_t l = 1; l < out.level_distance.size(); ++l)
    decreasing = decreasing && out.level_distance[l] < out.level_distance[l - 1];
  if (decreasing) out.response = ProbeResponse::Curve;
  return out;
}

ProbeResponse probe_classify(const ManifoldModel& model, const Region& U, const Region& V, const Vec& xb,
                             const Vec& xi, const TraceWindow& window, const std::vector<double>& eps,
                             const FlowOptions& opt) {
  return probe_classify_detail(model, U, V, xb, xi, window, eps, opt).response;
}

namespace {

struct UEvent {
  BoundaryCovector covector;
  int k;
  double a_integral;
};

struct RawResult {
  ProbeResult result;
  std::vector<ReflectionEvent> v_events;
  std::vector<UEvent> u_events;
};

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i)
    if (a(i) != b(i)) return a(i) < b(i);
  return a.size() < b.size();
}

}  // namespace

Measurements synthesize(const ManifoldModel& model, const Region& U, const Region& V,
                        const std::vector<Probe>& plan, const TraceWindow& window, const ProbeDesign& design,
                        int jobs, const FlowOptions& opt) {
  if (!regions_disjoint(U, V)) throw Error("U and V must be disjoint");
  std::vector<RawResult> raw(plan.size());
  parallel_for(plan.size(), jobs, [&](std::size_t i) {
    RawResult& r = raw[i];
    r.result.probe = plan[i];
    const BoundaryCovector bc = classify_covector(model, plan[i].base, plan[i].covec);
    r.result.source = bc;
    if (bc.cls == CovectorClass::Glancing) {
      r.result.response = probe_classify(model, U, V, bc.base, bc.covec, window, design.eps, opt);
      return;
    }
    if (bc.cls != CovectorClass::Hyperbolic) return;
    BrokenTrajectory tr;
    try {
      tr = trace_broken(model, bc, window, opt);
    } catch (const TangencyError& e) {
      r.result.note = e.what();
      return;
    }
    for (const auto& ev : tr.events) {
      if (V.contains(ev.xb)) {
        HitRecord h;
        h.hit = ev.covector;
        h.hit.base = V.canonical(ev.covector.base);
        h.Q = transfer_coefficient(model, bc, ev, &h.truth);
        r.result.hits.push_back(h);
        r.v_events.push_back(ev);
      } else if (U.contains(ev.xb) && ev.covector.cls == CovectorClass::Hyperbolic) {
        BoundaryCovector c = ev.covector;
        c.base = U.canonical(c.base);
        r.u_events.push_back({c, ev.k, ev.a_integral});
      }
    }
    r.result.response = r.result.hits.empty() ? ProbeResponse::Empty : ProbeResponse::Discrete;
  });

  Measurements out;
  out.n = model.n;
  out.U = U;
  out.V = V;
  out.window = window;
  std::map<std::vector<double>, bool> seen;
  const auto key = rounded_key;
  for (const auto& r : raw) {
    out.probes.push_back(r.result);
    seen[key(r.result.probe.base, r.result.probe.covec)] = true;
  }
  if (design.closure) {
    // Later U-hits of a probe are probes in their own right; their hit sets are suffixes.
    for (const auto& r : raw) {
      for (const UEvent& u : r.u_events) {
        const auto kk = key(u.covector.base, u.covector.covec);
        if (seen.count(kk)) continue;
        seen[kk] = true;
        ProbeResult pr;
        pr.probe = {u.covector.base, u.covector.covec, "closure"};
        pr.source = u.covector;
        const double xi_n0 = lift_normal_magnitude(model, u.covector.base, u.covector.covec);
        for (const auto& ev : r.v_events) {
          if (ev.k <= u.k) continue;
          HitRecord h;
          h.hit = ev.covector;
          h.hit.base = V.canonical(ev.covector.base);
          h.truth.k = ev.k - u.k;
          h.truth.sign = orientation_sign(u.covector.orientation);
          h.truth.a_integral = ev.a_integral - u.a_integral;
          h.truth.xi_n0 = xi_n0;
          h.truth.xi_nk = ev.xi_n;
          h.truth.tau = ev.tau;
          h.Q = assemble_q(h.truth.sign, h.truth.k, h.truth.a_integral,
                           transfer_modulus(model, u.covector.base, xi_n0, ev.xb, ev.xi_n));
          pr.hits.push_back(h);
        }
        pr.response = pr.hits.empty() ? ProbeResponse::Empty : ProbeResponse::Discrete;
        out.probes.push_back(std::move(pr));
      }
    }
  }
  for (auto& p : out.probes)
    std::sort(p.hits.begin(), p.hits.end(),
              [](const HitRecord& a, const HitRecord& b) { return a.truth.tau < b.truth.tau; });
  // Rounded keys keep the order stable under round-off between otherwise identical runs.
  std::stable_sort(out.probes.begin(), out.probes.end(), [](const ProbeResult& a, const ProbeResult& b) {
    return rounded_key(a.probe.base, a.probe.covec) < rounded_key(b.probe.base, b.probe.covec);
  });
  return out;
}

BlindedView blind(const Measurements& m) {
  BlindedView v;
  v.n = m.n;
  v.U = m.U;
  v.V = m.V;
  for (const auto& p : m.probes) {
    BlindedProbe b;
    b.x = p.probe.base;
    b.xi = p.probe.covec;
    b.response = p.response;
    for (const auto& h : p.hits) b.hits.push_back({h.hit.base, h.hit.covec, h.Q});
    std::sort(b.hits.begin(), b.hits.end(), [](const BlindedHit& a, const BlindedHit& c) {
      if (a.x != c.x) return lex_less(a.x, c.x);
      return lex_less(a.xi, c.xi);
    });
    v.probes.push_back(std::move(b));
  }
  return v;
}

std::string blinded_json(const BlindedView& v) {
  Json probes = Json::array();
  for (const auto& p : v.probes) {
    Json hits = Json::array();
    for (const auto& h : p.hits)
      hits.push_back({{"x", vec_json(h.x)}, {"xi", vec_json(h.xi)}, {"Q_re", h.Q.real()}, {"Q_im", h.Q.imag()}});
    probes.push_back({{"source", {{"x", vec_json(p.x)}, {"xi", vec_json(p.xi)}}},
                      {"response", to_string(p.response)},
                      {"hits", hits}});
  }
  Json j = {{"schema", "nullglide.blinded"}, {"version", 1}, {"n", v.n},
            {"U", region_json(v.U)},         {"V", region_json(v.V)}, {"probes", probes}};
  return dump_json(j);
}

BlindedView parse_blinded_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("blinded view is not valid JSON: ") + e.what());
  }
  if (j.value("schema", "") != "nullglide.blinded") throw DataError("not a blinded measurement file");
  BlindedView v;
  v.n = j.at("n").get<int>();
  v.U = json_region(j.at("U"));
  v.V = json_region(j.at("V"));
  for (const auto& p : j.at("probes")) {
    BlindedProbe b;
    b.x = json_vec(p.at("source").at("x"));
    b.xi = json_vec(p.at("source").at("xi"));
    b.response = parse_response(p.at("response").get<std::string>());
    for (const auto& h : p.at("hits"))
      b.hits.push_back({json_vec(h.at("x")), json_vec(h.at("xi")),
                        {h.at("Q_re").get<double>(), h.at("Q_im").get<double>()}});
    v.probes.push_back(std::move(b));
  }
  return v;
}

std::string truth_json(const Measurements& m) {
  Json probes = Json::array();
  for (const auto& p : m.probes) {
    Json hits = Json::array();
    for (const auto& h : p.hits)
      hits.push_back({{"x", vec_json(h.hit.base)},
                      {"xi", vec_json(h.hit.covec)},
                      {"k", h.truth.k},
                      {"sign", h.truth.sign},
                      {"A_integral", h.truth.a_integral},
                      {"xi_n0", h.truth.xi_n0},
                      {"xi_nk", h.truth.xi_nk},
                      {"tau", h.truth.tau}});
    probes.push_back({{"source", {{"x", vec_json(p.probe.base)}, {"xi", vec_json(p.probe.covec)}}},
                      {"kind", p.probe.kind},
                      {"class", to_string(p.source.cls)},
                      {"orientation", to_string(p.source.orientation)},
                      {"note", p.note},
                      {"hits", hits}});
  }
  Json j = {{"schema", "nullglide.truth"}, {"version", 1}, {"n", m.n}, {"probes", probes}};
  return dump_json(j);
}

}  // namespace nullglide
