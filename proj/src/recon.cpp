#include "nullglide/recon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace nullglide {

namespace {

Vec chart_periods(const BlindedView& b) {
  const int m = b.n - 1;
  if (b.U.periods.size() == m) return b.U.periods;
  if (b.V.periods.size() == m) return b.V.periods;
  return Vec::Zero(m);
}

Vec wrapped_difference(const Vec& a, const Vec& b, const Vec& periods) {
  Vec d = a - b;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (periods.size() > i && periods(i) > 0.0) d(i) = std::remainder(d(i), periods(i));
  return d;
}

Vec unit(const Vec& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw DataError("zero covector");
  return v / n;
}

std::vector<double> rounded(const Vec& a, const Vec& b) {
  std::vector<double> k;
  for (Eigen::Index i = 0; i < a.size(); ++i) k.push_back(std::round(a(i) * 1e9));
  for (Eigen::Index i = 0; i < b.size(); ++i) k.push_back(std::round(b(i) * 1e9));
  return k;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void join(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

struct HitRef {
  int probe;
  int hit;
};

// Hit pairs with distance below reach, found with a sweep along chart axis 0 when it is not periodic.
template <class Fn>
void near_hit_pairs(const BlindedView& b, const std::vector<HitRef>& hits, double reach, Fn&& fn) {
  const Vec per = chart_periods(b);
  auto hx = [&](const HitRef& h) -> const BlindedHit& { return b.probes[h.probe].hits[h.hit]; };
  std::vector<int> order(hits.size());
  std::iota(order.begin(), order.end(), 0);
  const bool sweep = !(per.size() > 0 && per(0) > 0.0);
  if (sweep)
    std::sort(order.begin(), order.end(), [&](int i, int j) { return hx(hits[i]).x(0) < hx(hits[j]).x(0); });
  for (std::size_t a = 0; a < order.size(); ++a) {
    const BlindedHit& ha = hx(hits[order[a]]);
    for (std::size_t c = a + 1; c < order.size(); ++c) {
      const BlindedHit& hc = hx(hits[order[c]]);
      if (sweep && hc.x(0) - ha.x(0) > reach) break;
      const double d = covector_distance(ha.x, ha.xi, hc.x, hc.xi, per);
      if (d <= reach) fn(hits[order[a]], hits[order[c]], d);
    }
  }
}

double time_value(const Vec& w, const Vec& x, const Vec& x0, const Vec& per) {
  return w.dot(wrapped_difference(x, x0, per));
}

Vec timelike_covector(const ConformalClassEstimate& cls) {
  Eigen::SelfAdjointEigenSolver<Mat> es(cls.q);
  Vec w = es.eigenvectors().col(0);
  if (!(es.eigenvalues()(0) < 0.0)) throw DataError("conformal class has no timelike direction");
  Eigen::Index i = 0;
  w.cwiseAbs().maxCoeff(&i);
  if (w(i) < 0.0) w = -w;
  return w;
}

bool in_patch(const Vec& x, const Vec& xi, const LensPatch& patch, const Vec& per) {
  return wrapped_difference(x, patch.x, per).norm() <= patch.radius &&
         (unit(xi) - unit(patch.xi)).norm() <= patch.angle;
}

// Probe indices of one weak-lens group inside the patch, ordered by the time function.
std::vector<int> ordered_chain(const BlindedView& b, const WeakLensGroup& g, const Vec& w, const LensPatch& patch) {
  const Vec per = chart_periods(b);
  std::vector<std::pair<double, int>> keyed;
  for (int p : g.probes) {
    const BlindedProbe& pr = b.probes[p];
    if (in_patch(pr.x, pr.xi, patch, per)) keyed.push_back({time_value(w, pr.x, patch.x, per), p});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (const auto& k : keyed) out.push_back(k.second);
  return out;
}

int find_hit(const BlindedProbe& p, const Vec& x, const Vec& xi, const Vec& per, double tol) {
  for (std::size_t i = 0; i < p.hits.size(); ++i)
    if (covector_distance(p.hits[i].x, p.hits[i].xi, x, xi, per) <= tol) return static_cast<int>(i);
  return -1;
}

double neville_at_zero(const std::vector<double>& x, std::vector<double> y) {
  const std::size_t n = x.size();
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t i = n - 1; i >= k; --i) y[i] = (x[i] * y[i - 1] - x[i - k] * y[i]) / (x[i] - x[i - k]);
  return y.back();
}

}  // namespace

double covector_distance(const Vec& xa, const Vec& xia, const Vec& xb, const Vec& xib, const Vec& periods) {
  const double scale = std::max(xia.norm(), xib.norm());
  const double dxi = scale > 0.0 ? (xia - xib).norm() / scale : 0.0;
  return wrapped_difference(xa, xb, periods).norm() + dxi;
}

WeakLensTable build_weak_lens(const BlindedView& b, double match_tol, double separation) {
  WeakLensTable t;
  t.match_tol = match_tol;
  std::vector<HitRef> hits;
  for (std::size_t p = 0; p < b.probes.size(); ++p)
    if (b.probes[p].response == ProbeResponse::Discrete)
      for (std::size_t h = 0; h < b.probes[p].hits.size(); ++h)
        hits.push_back({static_cast<int>(p), static_cast<int>(h)});
  UnionFind uf(b.probes.size());
  std::vector<std::pair<int, int>> close;
  near_hit_pairs(b, hits, std::max(match_tol, separation), [&](const HitRef& a, const HitRef& c, double d) {
    if (d <= match_tol)
      uf.join(a.probe, c.probe);
    else
      close.push_back({a.probe, c.probe});
  });
  std::map<int, std::vector<int>> comps;
  for (const HitRef& h : hits) comps[uf.find(h.probe)];
  for (std::size_t p = 0; p < b.probes.size(); ++p) {
    const auto it = comps.find(uf.find(static_cast<int>(p)));
    if (it != comps.end() && !b.probes[p].hits.empty()) it->second.push_back(static_cast<int>(p));
  }
  const Vec per = chart_periods(b);
  std::vector<WeakLensGroup> groups;
  for (auto& [root, members] : comps) {
    WeakLensGroup g;
    std::sort(members.begin(), members.end(), [&](int i, int j) {
      return rounded(b.probes[i].x, b.probes[i].xi) < rounded(b.probes[j].x, b.probes[j].xi);
    });
    g.probes = members;
    for (int p : members) {
      g.b_u.push_back({b.probes[p].x, b.probes[p].xi});
      for (const BlindedHit& h : b.probes[p].hits) {
        bool dup = false;
        for (const auto& v : g.b_v) dup = dup || covector_distance(v.x, v.xi, h.x, h.xi, per) <= match_tol;
        if (!dup) g.b_v.push_back({h.x, h.xi});
      }
    }
    std::sort(g.b_v.begin(), g.b_v.end(),
              [](const PhaseCovector& a, const PhaseCovector& c) { return rounded(a.x, a.xi) < rounded(c.x, c.xi); });
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const WeakLensGroup& a, const WeakLensGroup& c) {
    return rounded(a.b_u.front().x, a.b_u.front().xi) < rounded(c.b_u.front().x, c.b_u.front().xi);
  });
  t.groups = std::move(groups);
  t.probe_group.assign(b.probes.size(), -1);
  for (std::size_t g = 0; g < t.groups.size(); ++g)
    for (int p : t.groups[g].probes) t.probe_group[p] = static_cast<int>(g);
  std::vector<std::pair<int, int>> amb;
  for (const auto& [p, q] : close) {
    int a = t.probe_group[p], c = t.probe_group[q];
    if (a == c) continue;
    if (a > c) std::swap(a, c);
    amb.push_back({a, c});
  }
  std::sort(amb.begin(), amb.end());
  amb.erase(std::unique(amb.begin(), amb.end()), amb.end());
  t.ambiguous = std::move(amb);
  return t;
}

RecoverableSets detect_recoverable(const BlindedView& b, const RecoverableOptions& opt) {
  const int N = b.n - 1;
  const int min_dirs = opt.min_directions > 0 ? opt.min_directions : (b.n == 3 ? 2 : N * (N + 1) / 2 - 1);
  const Vec per = chart_periods(b);
  std::map<std::vector<double>, RecoverablePoint> u_pts, v_pts;
  RecoverableSets out;
  for (const BlindedProbe& p : b.probes) {
    const bool in_u = b.U.contains(p.x), in_v = b.V.contains(p.x);
    if (!in_u && !in_v) continue;
    auto& pts = in_u ? u_pts : v_pts;
    const std::vector<double> key = rounded(p.x, Vec::Zero(0));
    auto& pt = pts[key];
    pt.x = p.x;
    if (p.response == ProbeResponse::Discrete) continue;
    ++pt.sampled;
    if (p.response != ProbeResponse::Curve) continue;
    const Vec d = unit(p.xi);
    bool dup = false;
    for (const Vec& e : pt.directions) dup = dup || (unit(e) - d).norm() <= 1e-6;
    if (!dup) {
      pt.directions.push_back(p.xi);
      (in_u ? out.u_directions : out.v_directions).push_back({p.x, p.xi});
    }
  }
  auto finish = [&](std::map<std::vector<double>, RecoverablePoint>& pts, std::vector<RecoverablePoint>& dst) {
    for (auto& [key, pt] : pts) {
      const int k = static_cast<int>(pt.directions.size());
      const bool recoverable = b.n == 3 ? k >= 2 : k >= 1;
      if (!recoverable) continue;
      if (k < min_dirs) out.undersampled.push_back(pt.x);
      dst.push_back(pt);
    }
  };
  finish(u_pts, out.u_points);
  finish(v_pts, out.v_points);
  (void)per;
  return out;
}

ConformalClassEstimate fit_conformal_class(const Vec& x, const std::vector<Vec>& directions, const Vec* timelike) {
  if (directions.empty()) throw DataError("no null directions");
  const int N = static_cast<int>(directions.front().size());
  const int unknowns = N * (N + 1) / 2;
  const int need = N == 2 ? 2 : unknowns - 1;
  if (static_cast<int>(directions.size()) < need)
    throw DataError("conformal fit needs " + std::to_string(need) + " directions");
  const int rows = std::max<int>(static_cast<int>(directions.size()), unknowns);
  MatX a = MatX::Zero(rows, unknowns);
  for (std::size_t r = 0; r < directions.size(); ++r) {
    const Vec d = unit(directions[r]);
    int c = 0;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) a(static_cast<Eigen::Index>(r), c++) = (i == j ? 1.0 : 2.0) * d(i) * d(j);
  }
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeFullV);
  const VecX sv = svd.singularValues();
  ConformalClassEstimate e;
  e.x = x;
  e.second_singular = sv(unknowns - 2) / std::max(sv(0), 1e-300);
  if (e.second_singular < 1e-8) throw DataError("degenerate direction set");
  const VecX nul = svd.matrixV().col(unknowns - 1);
  Mat q(N, N);
  int c = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) q(i, j) = q(j, i) = nul(c++);
  auto negatives = [N](const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    int neg = 0;
    for (Eigen::Index i = 0; i < N; ++i) neg += es.eigenvalues()(i) < 0.0;
    return neg;
  };
  if (N > 2 && negatives(q) == N - 1) q = -q;
  if (negatives(q) != 1) throw DataError("recovered quadric is not Lorentzian");
  // In two dimensions both signs are Lorentzian; the timelike reference (or chart axis 0) picks one.
  if (N == 2) {
    const Vec t = timelike ? *timelike : Vec(Vec::Unit(N, 0));
    if (t.dot(q * t) > 0.0) q = -q;
  }
  q /= std::pow(std::abs(q.determinant()), 1.0 / N);
  e.q = q;
  for (const Vec& d0 : directions) {
    const Vec d = unit(d0);
    e.residual = std::max(e.residual, std::abs(d.dot(q * d)));
  }
  return e;
}

double cone_angle_deviation(const Mat& q_est, const Mat& q_true, int samples) {
  const int N = static_cast<int>(q_true.rows());
  const Mat f = boundary_covector_frame(q_true);
  std::vector<Vec> dirs;
  if (N == 2) {
    dirs.push_back(Vec(f.row(0).transpose() + f.row(1).transpose()));
    dirs.push_back(Vec(f.row(0).transpose() - f.row(1).transpose()));
  } else {
    for (int i = 0; i < samples; ++i) {
      const double a = 2.0 * std::numbers::pi * i / samples;
      dirs.push_back(Vec(f.row(0).transpose() + std::cos(a) * f.row(1).transpose() + std::sin(a) * f.row(2).transpose()));
    }
  }
  double worst = 0.0;
  for (const Vec& d0 : dirs) {
    const Vec d = unit(d0);
    const Vec grad = 2.0 * (q_est * d);
    const Vec tangential = grad - grad.dot(d) * d;
    const double tn = tangential.norm();
    worst = std::max(worst, tn > 0.0 ? std::abs(d.dot(q_est * d)) / tn : std::numbers::pi);
  }
  return worst;
}

Vec raise_direction(const Mat& q, const Vec& xi) { return unit(q * xi); }

LocalLens recover_lens_orientation(const BlindedView& b, const WeakLensTable& table, const ConformalClassEstimate& cls,
                                   const LensPatch& patch, bool flip) {
  LocalLens out;
  out.time_covector = timelike_covector(cls);
  if (flip) out.time_covector = -out.time_covector;
  const Vec per = chart_periods(b);
  for (std::size_t g = 0; g < table.groups.size(); ++g) {
    const std::vector<int> chain = ordered_chain(b, table.groups[g], out.time_covector, patch);
    if (chain.size() < 2) continue;
    std::vector<PhaseCovector> c;
    for (int p : chain) c.push_back({b.probes[p].x, b.probes[p].xi});
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      out.steps.push_back({c[i], c[i + 1]});
      gaps.push_back(wrapped_difference(c[i + 1].x, c[i].x, per).norm());
    }
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (double d : gaps) out.patch_too_large = out.patch_too_large || d > 2.5 * median;
    out.chains.push_back(std::move(c));
    out.chain_groups.push_back(static_cast<int>(g));
  }
  return out;
}

int lens_branch(const ManifoldModel& model, const LocalLens& lens, double tol) {
  if (lens.steps.empty()) return 0;
  const Vec per = model.chart->periods();
  int branch = 0;
  for (const auto& [a, c] : lens.steps) {
    const BoundaryCovector bc = classify_covector(model, a.x, a.xi);
    int here = 0;
    for (bool fwd : {true, false}) {
      TraceWindow w;
      w.forward = fwd;
      w.max_events = 1;
      const BrokenTrajectory tr = trace_broken(model, bc, w);
      if (tr.events.empty()) continue;
      const BoundaryCovector& e = tr.events.front().covector;
      if (covector_distance(e.base, e.covec, c.x, c.xi, per) <= tol) {
        here = fwd ? 1 : -1;
        break;
      }
    }
    if (here == 0 || (branch != 0 && here != branch)) return 0;
    branch = here;
  }
  return branch;
}

ConformalRelationReport check_conformal_relation(const BlindedView& m1, const BlindedView& m2, const MetricFn& h,
                                                 double flag_tol) {
  if (m1.n != m2.n || m1.probes.size() != m2.probes.size()) throw DataError("record mismatch between scenarios");
  const int n = m1.n;
  const Vec per = chart_periods(m1);
  auto side = [&](const Vec& x0, const Vec& xi0, const BlindedHit& hit) {
    const Mat h0 = h(x0), hk = h(hit.x);
    const double s0 = std::abs(xi0.dot(h0.inverse() * xi0));
    const double sk = std::abs(hit.xi.dot(hk.inverse() * hit.xi));
    const double base = 2.0 * std::pow(s0 * sk, 0.25) * std::pow(std::abs(h0.determinant()), 0.25) *
                        std::pow(std::abs(hk.determinant()), -0.25);
    return -2.0 * std::log(std::abs(hit.Q) / base);
  };
  ConformalRelationReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t p = 0; p < m1.probes.size(); ++p) {
    const BlindedProbe &a = m1.probes[p], &c = m2.probes[p];
    if (covector_distance(a.x, a.xi, c.x, c.xi, per) > 1e-9 || a.hits.size() != c.hits.size())
      throw DataError("record mismatch between scenarios");
    for (std::size_t k = 0; k < a.hits.size(); ++k) {
      if (covector_distance(a.hits[k].x, a.hits[k].xi, c.hits[k].x, c.hits[k].xi, per) > 1e-6)
        throw DataError("record mismatch between scenarios");
      ConformalRelationRecord r;
      r.x0 = a.x;
      r.xk = a.hits[k].x;
      r.d1 = side(a.x, a.xi, a.hits[k]);
      r.d2 = side(c.x, c.xi, c.hits[k]);
      r.discrepancy = r.d2 - r.d1;
      rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(r.discrepancy));
      lo = std::min(lo, r.discrepancy);
      hi = std::max(hi, r.discrepancy);
      rep.records.push_back(r);
    }
  }
  (void)n;
  rep.spread = rep.records.empty() ? 0.0 : hi - lo;
  rep.flagged = rep.max_discrepancy > flag_tol;
  return rep;
}

ConstancyReport validate_local_constancy(const ManifoldModel& model, const ScalarField& phi, const Region& U,
                                         const Region& V, const std::vector<int>& counts,
                                         const TraceWindow& window, double flag_tol) {
  ConstancyReport rep;
  const int n = model.n;
  const double span = std::isfinite(window.tau_max - window.tau_min) ? window.tau_max - window.tau_min : 20.0;
  std::vector<double> grid;
  for (int i = 0; i <= 2000; ++i) grid.push_back(1.5 * span * i / 2000);
  for (const Vec& z : U.grid(counts, 0.0)) {
    const double pz = phi(model.chart->embed(z));
    for (Vec v : null_boundary_vectors(model, z, default_glancing_angles(n))) {
      const Vec dtau = model.chart->jacobian(z).transpose() * model.temporal.grad(model.chart->embed(z));
      v /= dtau.dot(v);
      TraceWindow w = window;
      w.forward = true;
      const BoundaryCurve c = boundary_null_geodesic(model, z, v, w, {}, grid);
      for (const auto& s : c.samples) {
        if (!V.contains(s.xb)) continue;
        ++rep.samples;
        const double px = phi(model.chart->embed(s.xb));
        rep.max_violation = std::max(rep.max_violation, std::abs((n - 2) * pz - n * px));
      }
    }
  }
  rep.flagged = rep.max_violation >= flag_tol;
  return rep;
}

OneFormDirection recover_one_form_direction(const BlindedView& b, const WeakLensTable& table,
                                            const ConformalClassEstimate& cls, const Vec& glancing,
                                            const LensPatch& patch_in, const OneFormOptions& opt) {
  OneFormDirection out;
  LensPatch patch = patch_in;
  patch.xi = glancing;
  out.x = patch.x;
  out.glancing = glancing;
  out.u = raise_direction(cls.q, glancing);
  const Vec per = chart_periods(b);
  const Vec w = timelike_covector(cls);
  // eps probes: same base, hyperbolic responses, displaced from the glancing covector along one line.
  std::vector<std::pair<double, int>> cand;
  for (std::size_t p = 0; p < b.probes.size(); ++p) {
    const BlindedProbe& pr = b.probes[p];
    if (pr.response != ProbeResponse::Discrete) continue;
    if (wrapped_difference(pr.x, patch.x, per).norm() > 1e-9) continue;
    if ((unit(pr.xi) - unit(glancing)).norm() > opt.max_angle) continue;
    cand.push_back({(pr.xi - glancing).norm() / glancing.norm(), static_cast<int>(p)});
  }
  std::sort(cand.begin(), cand.end());
  if (cand.size() < 2) {
    out.note = "fewer than two eps levels";
    return out;
  }
  const Vec line = unit(b.probes[cand.front().second].xi - glancing);
  std::vector<std::pair<double, int>> levels;
  for (const auto& c : cand)
    if ((unit(b.probes[c.second].xi - glancing) - line).norm() <= 1e-6) levels.push_back(c);
  for (const auto& [eps, p] : levels) {
    const int g = table.probe_group[p];
    if (g < 0) continue;
    const std::vector<int> chain = ordered_chain(b, table.groups[g], w, patch);
    const auto it = std::find(chain.begin(), chain.end(), p);
    if (it == chain.end()) continue;
    const long i0 = it - chain.begin();
    const BlindedProbe& px = b.probes[p];
    std::vector<std::pair<double, double>> pts;
    for (long j = 0; j < static_cast<long>(chain.size()); ++j) {
      const long m = std::labs(j - i0);
      if (m == 0 || (m - 1 - opt.offset) < 0 || (m - 1 - opt.offset) % std::max(1, opt.stride) != 0) continue;
      const BlindedProbe& pz = b.probes[chain[j]];
      // Hits of the later probe are a suffix of the earlier one's.
      const BlindedProbe& later = j > i0 ? pz : px;
      const BlindedProbe& earlier = j > i0 ? px : pz;
      int hl = -1, he = -1;
      for (std::size_t k = 0; k < later.hits.size() && he < 0; ++k) {
        he = find_hit(earlier, later.hits[k].x, later.hits[k].xi, per, opt.match_tol);
        hl = static_cast<int>(k);
      }
      if (he < 0) continue;
      const std::complex<double> qx = (j > i0 ? earlier.hits[he] : later.hits[hl]).Q;
      const std::complex<double> qz = (j > i0 ? later.hits[hl] : earlier.hits[he]).Q;
      const double parity = m % 2 == 0 ? 1.0 : -1.0;
      const double t = wrapped_difference(pz.x, px.x, per).dot(out.u);
      pts.push_back({t, std::arg(parity * qx / qz)});
    }
    if (static_cast<int>(pts.size()) < std::max(2, opt.min_points)) continue;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& c) { return std::abs(a.first) < std::abs(c.first); });
    double prev = 0.0;
    bool ambiguous = false;
    for (auto& [t, ph] : pts) {
      ph += 2.0 * std::numbers::pi * std::round((prev - ph) / (2.0 * std::numbers::pi));
      ambiguous = ambiguous || std::abs(ph - prev) > std::numbers::pi / 2.0;
      prev = ph;
    }
    if (ambiguous) out.note = "phase unwrap ambiguity";
    double tmax = 0.0;
    for (const auto& pt : pts) tmax = std::max(tmax, std::abs(pt.first));
    const int deg = std::min<int>(3, static_cast<int>(pts.size()) - 1);
    MatX a(static_cast<Eigen::Index>(pts.size()), deg);
    VecX r(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double u = pts[i].first / tmax;
      for (int d = 0; d < deg; ++d) a(static_cast<Eigen::Index>(i), d) = std::pow(u, d + 1);
      r(static_cast<Eigen::Index>(i)) = pts[i].second;
    }
    const VecX c = a.colPivHouseholderQr().solve(r);
    out.eps.push_back(eps);
    out.slopes.push_back(c(0) / tmax);
    out.points.push_back(static_cast<int>(pts.size()));
  }
  if (out.eps.size() < 2) {
    if (out.note.empty()) out.note = "fewer than two usable eps levels";
    return out;
  }
  out.value = neville_at_zero(out.eps, out.slopes);
  std::vector<double> e(out.eps.begin(), out.eps.end() - 1), s(out.slopes.begin(), out.slopes.end() - 1);
  out.extrapolation_residual = std::abs(out.value - (e.size() > 1 ? neville_at_zero(e, s) : s.front()));
  out.ok = out.note.empty();
  return out;
}

OneFormEstimate recover_one_form(const BlindedView& b, const WeakLensTable& table, const ConformalClassEstimate& cls,
                                 const std::vector<Vec>& glancing, const LensPatch& patch_template,
                                 const OneFormOptions& opt) {
  OneFormEstimate out;
  out.x = patch_template.x;
  const int N = b.n - 1;
  std::vector<Vec> us;
  std::vector<double> vals;
  for (const Vec& g : glancing) {
    OneFormDirection d = recover_one_form_direction(b, table, cls, g, patch_template, opt);
    if (d.ok) {
      us.push_back(d.u);
      vals.push_back(d.value);
    }
    out.directions.push_back(std::move(d));
  }
  MatX a(static_cast<Eigen::Index>(us.size()), N);
  VecX r(static_cast<Eigen::Index>(us.size()));
  for (std::size_t i = 0; i < us.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) = us[i].transpose();
    r(static_cast<Eigen::Index>(i)) = vals[i];
  }
  if (static_cast<int>(us.size()) < N) {
    out.note = "too few spanning directions";
    return out;
  }
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX sv = svd.singularValues();
  if (sv(N - 1) < 1e-6 * sv(0)) {
    out.note = "too few spanning directions";
    return out;
  }
  const VecX sol = svd.solve(r);
  out.A = Vec(sol);
  out.ok = true;
  return out;
}

MetricRecovery recover_metric_with_prior(const BlindedView& b, const MetricPrior& prior, PriorSide side,
                                         const Vec& y, const std::vector<Vec>& basis, double match_tol) {
  const int n = b.n;
  const int N = n - 1;
  if (static_cast<int>(basis.size()) != N) throw DataError("covector basis needs n - 1 entries");
  const Vec per = chart_periods(b);
  const std::vector<Vec> etas = polarization_set(basis);
  MetricRecovery out;
  out.point = y;
  for (const Vec& eta : etas) {
    double s = -1.0;
    for (const BlindedProbe& p : b.probes) {
      if (p.response != ProbeResponse::Discrete || p.hits.empty()) continue;
      if (side == PriorSide::U) {
        const int h = find_hit(p, y, eta, per, match_tol);
        if (h < 0) continue;
        const Mat g0 = prior.gbar(p.x);
        const double xn = std::sqrt(std::abs(p.xi.dot(g0.inverse() * p.xi)));
        s = std::pow(std::abs(p.hits[h].Q) / (2.0 * std::sqrt(xn) * std::pow(std::abs(g0.determinant()), 0.25)), 4);
        if (prior.orientation) out.orientation = prior.orientation(p.x, p.xi);
      } else {
        if (covector_distance(p.x, p.xi, y, eta, per) > match_tol) continue;
        const BlindedHit& h = p.hits.front();
        const Mat gk = prior.gbar(h.x);
        const double xn = std::sqrt(std::abs(h.xi.dot(gk.inverse() * h.xi)));
        s = std::pow(std::abs(h.Q) / (2.0 * std::sqrt(xn) * std::pow(std::abs(gk.determinant()), -0.25)), 4);
        if (prior.orientation) out.orientation = prior.orientation(h.x, h.xi);
      }
      break;
    }
    if (s < 0.0) throw DataError("missing probe coverage for a polarization covector");
    out.S.push_back(s);
  }
  Mat cz(N, N);
  for (int a = 0; a < N; ++a) cz(a, a) = -out.S[a];
  int k = N;
  for (int a = 0; a < N; ++a)
    for (int c = a + 1; c < N; ++c) {
      cz(a, c) = cz(c, a) = 0.5 * (-out.S[k] + out.S[a] + out.S[c]);
      ++k;
    }
  Mat z(N, N);
  for (int a = 0; a < N; ++a) z.col(a) = basis[a];
  const Mat zi = z.inverse();
  out.C = zi.transpose() * cz * zi;
  const double det = std::abs(out.C.determinant());
  out.det_factor = side == PriorSide::U ? std::pow(det, -1.0 / n) : std::pow(det, 1.0 / (n - 2));
  const double scale = side == PriorSide::U ? out.det_factor : 1.0 / out.det_factor;
  out.gbar = (scale * out.C).inverse();
  return out;
}

int ReachableSets::u_count() const { return static_cast<int>(std::count(u_in.begin(), u_in.end(), true)); }
int ReachableSets::v_count() const { return static_cast<int>(std::count(v_in.begin(), v_in.end(), true)); }

namespace {

bool geodesic_reaches(const ManifoldModel& model, const Vec& x, Vec v, bool forward, const Region& target,
                      const TraceWindow& window, const FlowOptions& opt) {
  const Vec dtau = model.chart->jacobian(x).transpose() * model.temporal.grad(model.chart->embed(x));
  v /= dtau.dot(v);
  if (!forward) v = -v;
  TraceWindow w = window;
  const double span = std::isfinite(window.tau_max - window.tau_min) ? window.tau_max - window.tau_min : 20.0;
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(span * i / 4000);
  const BoundaryCurve c = boundary_null_geodesic(model, x, v, w, opt, grid);
  for (const auto& s : c.samples)
    if (target.contains(s.xb)) return true;
  return false;
}

bool broken_reaches(const ManifoldModel& model, const Vec& x, const Vec& xi, bool forward, const Region& target,
                    const TraceWindow& window, const FlowOptions& opt) {
  const BoundaryCovector bc = classify_covector(model, x, xi);
  if (bc.cls != CovectorClass::Hyperbolic) return false;
  TraceWindow w = window;
  w.forward = forward;
  w.max_events = std::min(w.max_events, 400);
  try {
    const BrokenTrajectory tr = trace_broken(model, bc, w, opt);
    for (const auto& ev : tr.events)
      if (target.contains(ev.xb)) return true;
  } catch (const TangencyError&) {
  }
  return false;
}

}  // namespace

ReachableSets reachable_sets(const ManifoldModel& model, const Region& U, const Region& V, ReachMode mode,
                             const TraceWindow& window, const std::vector<int>& counts, int directions, double inset,
                             const FlowOptions& opt) {
  ReachableSets out;
  if (!std::isfinite(window.tau_min) || !std::isfinite(window.tau_max))
    throw Error("reachable sets need a finite tau window");
  if (U.empty() || V.empty()) {
    if (!U.empty()) out.u_grid = U.grid(counts, inset);
    if (!V.empty()) out.v_grid = V.grid(counts, inset);
    out.u_in.assign(out.u_grid.size(), false);
    out.v_in.assign(out.v_grid.size(), false);
    return out;
  }
  out.u_grid = U.grid(counts, inset);
  out.v_grid = V.grid(counts, inset);
  const int n = model.n;
  const int m = n - 1;
  std::vector<Vec> fan;
  for (int i = 0; i < directions; ++i) {
    const double a = 2.0 * std::numbers::pi * (i + 0.5) / directions;
    Vec d = Vec::Zero(m);
    d(0) = -1.0;
    d(1) = 0.999 * std::cos(a);
    if (m > 2) d(2) = 0.999 * std::sin(a);
    fan.push_back(d);
  }
  auto point_in = [&](const Vec& x, bool forward, const Region& target) {
    if (mode == ReachMode::Gliding) {
      const std::vector<Vec> vs = null_boundary_vectors(model, x, default_glancing_angles(n));
      int hits = 0;
      for (const Vec& v : vs) hits += geodesic_reaches(model, x, v, forward, target, window, opt);
      return n == 3 ? hits == static_cast<int>(vs.size()) : hits >= 1;
    }
    const BoundaryMetric bm = boundary_metric(model, x);
    const Mat frame = boundary_covector_frame(bm.g_inv);
    for (const Vec& d : fan) {
      // Fan of hyperbolic covectors in the gbar-orthonormal frame, both time orientations.
      for (double sg : {1.0, -1.0}) {
        Vec xi = Vec::Zero(m);
        for (int a = 0; a < m; ++a) xi += sg * (a == 0 ? 1.0 : 1.0) * d(a) * frame.row(a).transpose();
        if (broken_reaches(model, x, xi, forward, target, window, opt)) return true;
      }
    }
    return false;
  };
  for (const Vec& x : out.u_grid) out.u_in.push_back(point_in(x, true, V));
  for (const Vec& x : out.v_grid) out.v_in.push_back(point_in(x, false, U));
  return out;
}

}  // namespace nullglide
