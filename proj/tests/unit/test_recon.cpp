#include <doctest.h>

#include "nullglide/gauge.hpp"
#include "nullglide/recon.hpp"
#include "nullglide/scenarios.hpp"
#include "support.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace nullglide;
using namespace testing_support;

namespace {

Region cyl_region(double t0, double t1, double th0, double th1) {
  Region r;
  r.box = {{t0, t1}, {th0, th1}};
  r.periods = make_vec({0.0, 2.0 * pi});
  return r;
}

const Region kU = cyl_region(0.0, 6.0, -0.5, 0.5);
const Region kV = cyl_region(0.0, 12.0, pi - 0.5, pi + 0.5);

TraceWindow window(double lo, double hi) {
  TraceWindow w;
  w.tau_min = lo;
  w.tau_max = hi;
  return w;
}

OneFormSpec dt_form(double a) {
  OneFormSpec f;
  f.constant = {a, 0.0, 0.0};
  return f;
}

BlindedView explicit_probes(const Scenario& s, const std::vector<Probe>& plan, const Region& U, const Region& V,
                            double tau_max) {
  ProbeDesign d;
  d.closure = false;
  return blind(synthesize(s.model, U, V, plan, window(-2.0, tau_max), d));
}

// Glancing design at the given U bases (eps probes plus closure).
Measurements glancing_measurements(const Scenario& s, std::vector<int> counts = {3, 3}, double inset = 0.1) {
  ProbeDesign d;
  d.base_counts = std::move(counts);
  d.inset = inset;
  d.fan = 8;
  return synthesize(s.model, kU, kV, make_probe_plan(s.model, kU, kV, d, window(-2.0, 14.0)), window(-2.0, 14.0),
                    d);
}

std::set<std::vector<long>> group_signature(const BlindedView& b, const WeakLensTable& t) {
  std::set<std::vector<long>> out;
  for (const auto& g : t.groups) {
    std::vector<long> key;
    for (int p : g.probes) {
      key.push_back(std::lround(b.probes[p].x(0) * 1e6));
      key.push_back(std::lround(b.probes[p].x(1) * 1e6));
    }
    std::sort(key.begin(), key.end());
    out.insert(key);
  }
  return out;
}

// Flat unit cylinder: the boundary null lines from (t0, th0) are th = th0 +- (t - t0).
bool flat_line_reaches(double t0, double th0, double dir, const Region& V, double tau_max) {
  for (double t = t0; t <= tau_max; t += 1e-3) {
    const Vec p = make_vec({t, th0 + dir * (t - t0)});
    if (V.contains(p)) return true;
  }
  return false;
}

// Recoverable point nearest the middle of the theta range, earliest first.
const RecoverablePoint& central_point(const RecoverableSets& r) {
  REQUIRE(!r.u_points.empty());
  const RecoverablePoint* best = &r.u_points.front();
  for (const auto& p : r.u_points)
    if (std::abs(p.x(1)) < std::abs(best->x(1)) - 1e-9 ||
        (std::abs(std::abs(p.x(1)) - std::abs(best->x(1))) <= 1e-9 && p.x(0) < best->x(0)))
      best = &p;
  return *best;
}

}  // namespace

TEST_SUITE("recon") {

TEST_CASE("weak lens: radial family shares one trajectory, distinct chords separate") {
  const Scenario s = make_cylinder(3, 1.0);
  const Region U = cyl_region(-1.0, 11.0, -0.5, 0.5);
  const Region V = cyl_region(-1.0, 11.0, pi - 0.5, pi + 0.5);
  std::vector<Probe> plan;
  for (double t : {0.0, 4.0, 8.0}) plan.push_back({make_vec({t, 0.0}), make_vec({-1.0, 0.0}), "grid"});
  plan.push_back({make_vec({0.0, 0.0}), make_vec({-1.0, 0.2}), "grid"});
  plan.push_back({make_vec({0.0, 0.0}), make_vec({-1.0, -0.2}), "grid"});
  plan.push_back({make_vec({0.0, 0.0}), make_vec({-0.2, 1.0}), "grid"});  // elliptic: Empty
  const BlindedView b = explicit_probes(s, plan, U, V, 12.0);
  const WeakLensTable t = build_weak_lens(b);
  int radial = -1;
  for (std::size_t g = 0; g < t.groups.size(); ++g)
    if (t.groups[g].b_u.size() == 3) radial = static_cast<int>(g);
  REQUIRE(radial >= 0);
  // Chord oracle: hits at (2 + 4m, pi).
  for (const auto& h : t.groups[radial].b_v) {
    const double m = (h.x(0) - 2.0) / 4.0;
    CHECK(std::abs(m - std::round(m)) <= 1e-9);
    CHECK(std::abs(angle_gap(h.x(1), pi)) <= 1e-9);
  }
  CHECK(t.groups.size() == 3);
  for (std::size_t p = 0; p < b.probes.size(); ++p)
    if (b.probes[p].response != ProbeResponse::Discrete) CHECK(t.probe_group[p] == -1);
  // Every hit belongs to exactly one B_V.
  std::size_t total_hits = 0, listed = 0;
  std::set<std::vector<long>> distinct;
  for (const auto& p : b.probes)
    for (const auto& h : p.hits) distinct.insert({std::lround(h.x(0) * 1e6), std::lround(h.x(1) * 1e6)});
  total_hits = distinct.size();
  for (const auto& g : t.groups) listed += g.b_v.size();
  CHECK(listed == total_hits);
  CHECK(t.ambiguous.empty());
}

TEST_CASE("weak lens grouping is invariant under probe permutation and covector rescaling") {
  const Scenario s = make_cylinder(3, 1.0);
  const Measurements m = glancing_measurements(s, {2, 3}, 0.2);
  const BlindedView b = blind(m);
  const auto base = group_signature(b, build_weak_lens(b));
  BlindedView perm = b;
  std::reverse(perm.probes.begin(), perm.probes.end());
  std::rotate(perm.probes.begin(), perm.probes.begin() + 7, perm.probes.end());
  CHECK(group_signature(perm, build_weak_lens(perm)) == base);
  BlindedView scaled = b;
  for (auto& p : scaled.probes) {
    p.xi *= 3.0;
    for (auto& h : p.hits) h.xi *= 3.0;
  }
  CHECK(group_signature(scaled, build_weak_lens(scaled)) == base);
  CHECK(base.size() > 10);
}

TEST_CASE("weak lens reports nearby but distinct groups as ambiguous") {
  BlindedView b;
  b.n = 3;
  b.U = kU;
  b.V = kV;
  auto probe = [](double th, double hit_t) {
    BlindedProbe p;
    p.x = make_vec({1.0, th});
    p.xi = make_vec({-1.0, 0.0});
    p.response = ProbeResponse::Discrete;
    p.hits.push_back({make_vec({hit_t, pi}), make_vec({-1.0, 0.0}), {0.0, 2.0}});
    return p;
  };
  b.probes = {probe(0.0, 3.0), probe(0.1, 3.0 + 5e-7), probe(0.2, 3.0 + 1e-4), probe(0.3, 5.0)};
  const WeakLensTable t = build_weak_lens(b);
  CHECK(t.groups.size() == 3);
  CHECK(t.probe_group[0] == t.probe_group[1]);
  REQUIRE(t.ambiguous.size() == 1);
  CHECK(t.ambiguous[0] == std::make_pair(std::min(t.probe_group[0], t.probe_group[2]),
                                         std::max(t.probe_group[0], t.probe_group[2])));
}

TEST_CASE("recoverable points match flat null-line reachability") {
  const Scenario s = make_cylinder(3, 1.0);
  const Measurements m = glancing_measurements(s, {3, 3}, 0.1);
  const RecoverableSets r = detect_recoverable(blind(m));
  std::set<std::vector<long>> got;
  for (const auto& p : r.u_points) got.insert({std::lround(p.x(0) * 1e6), std::lround(p.x(1) * 1e6)});
  int expected = 0;
  for (const Vec& x : kU.grid({3, 3}, 0.1)) {
    const bool both = flat_line_reaches(x(0), x(1), 1.0, kV, 14.0) && flat_line_reaches(x(0), x(1), -1.0, kV, 14.0);
    expected += both;
    CHECK(both == (got.count({std::lround(x(0) * 1e6), std::lround(x(1) * 1e6)}) == 1));
  }
  CHECK(expected > 0);
  CHECK(r.undersampled.empty());
}

TEST_CASE("recoverable: n = 3 needs both directions; V in the past gives nothing") {
  BlindedView b;
  b.n = 3;
  b.U = kU;
  b.V = kV;
  BlindedProbe p;
  p.x = make_vec({1.0, 0.0});
  p.xi = make_vec({-1.0, 1.0});
  p.response = ProbeResponse::Curve;
  b.probes.push_back(p);
  CHECK(detect_recoverable(b).u_points.empty());
  p.xi = make_vec({-1.0, -1.0});
  b.probes.push_back(p);
  CHECK(detect_recoverable(b).u_points.size() == 1);

  const Scenario s = make_cylinder(3, 1.0);
  const Region past = cyl_region(-12.0, -6.0, pi - 0.5, pi + 0.5);
  ProbeDesign d;
  d.base_counts = {2, 2};
  d.fan = 4;
  const auto plan = make_probe_plan(s.model, kU, past, d, window(-2.0, 14.0));
  const RecoverableSets r = detect_recoverable(blind(synthesize(s.model, kU, past, plan, window(-2.0, 14.0), d)));
  CHECK(r.u_points.empty());
  CHECK(r.u_directions.empty());
}

TEST_CASE("fit_conformal_class examples") {
  const Vec x = make_vec({0.0, 0.0});
  const auto two = fit_conformal_class(x, {make_vec({1.0, 1.0}), make_vec({1.0, -1.0})});
  CHECK((two.q - Mat(Eigen::Vector2d(-1.0, 1.0).asDiagonal())).norm() <= 1e-12);
  CHECK(two.residual <= 1e-14);

  std::vector<Vec> cone;
  for (int i = 0; i < 5; ++i) {
    const double a = 2.0 * pi * i / 5.0 + 0.3;
    cone.push_back(make_vec({1.0, std::cos(a), std::sin(a)}));
  }
  const auto three = fit_conformal_class(make_vec({0.0, 0.0, 0.0}), cone);
  CHECK((three.q - Mat(Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal())).norm() <= 1e-10);

  // Rescaling the representatives leaves the normalized quadric unchanged.
  std::vector<Vec> scaled = cone;
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= 0.5 + static_cast<double>(i);
  CHECK((fit_conformal_class(make_vec({0.0, 0.0, 0.0}), scaled).q - three.q).norm() <= 1e-10);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> noisy = cone;
  for (auto& v : noisy)
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-6 * u(rng);
  const auto est = fit_conformal_class(make_vec({0.0, 0.0, 0.0}), noisy);
  CHECK(est.residual <= 1e-5);
  CHECK(cone_angle_deviation(est.q, three.q) <= 1e-5);

  CHECK_THROWS_AS(fit_conformal_class(x, {make_vec({1.0, 1.0}), make_vec({2.0, 2.0})}), DataError);
  CHECK_THROWS_AS(fit_conformal_class(make_vec({0.0, 0.0, 0.0}), {cone[0], cone[1], cone[2]}), DataError);
}

TEST_CASE("cone_angle_deviation matches the null-line angle oracle") {
  // Cone of diag(-1, 1 + d) is the pair of lines xi_1 = +-xi_0 / sqrt(1 + d).
  for (double d : {1e-3, 1e-2}) {
    Mat q(2, 2);
    q << -1.0, 0.0, 0.0, 1.0 + d;
    const Mat truth = Mat(Eigen::Vector2d(-1.0, 1.0).asDiagonal());
    const double oracle = std::abs(std::atan(1.0 / std::sqrt(1.0 + d)) - pi / 4.0);
    CHECK(cone_angle_deviation(q, truth) == doctest::Approx(oracle).epsilon(2 * d));
  }
}

TEST_CASE("lens orientation near glancing is uniform and flips with the time function") {
  const Scenario s = make_cylinder(3, 1.0);
  const Measurements m = glancing_measurements(s);
  const BlindedView b = blind(m);
  const WeakLensTable t = build_weak_lens(b);
  const RecoverableSets r = detect_recoverable(b);
  REQUIRE(!r.u_points.empty());
  int patches = 0;
  for (const auto& pt : r.u_points) {
    const auto cls = fit_conformal_class(pt.x, pt.directions);
    for (const Vec& g : pt.directions) {
      LensPatch patch;
      patch.x = pt.x;
      patch.xi = g;
      const LocalLens l = recover_lens_orientation(b, t, cls, patch);
      const LocalLens lf = recover_lens_orientation(b, t, cls, patch, true);
      if (l.steps.empty()) continue;  // late points: the chain leaves U at once
      const int branch = lens_branch(s.model, l);
      CHECK(branch != 0);
      CHECK(lens_branch(s.model, lf) == -branch);
      CHECK(!l.patch_too_large);
      // k-fold composition of L' follows each chain.
      for (const auto& chain : l.chains) {
        CHECK(chain.size() >= 2);
        PhaseCovector cur = chain.front();
        for (std::size_t k = 1; k < chain.size(); ++k) {
          bool moved = false;
          for (const auto& [a, c] : l.steps)
            if ((a.x - cur.x).norm() + (a.xi - cur.xi).norm() == 0.0) {
              cur = c;
              moved = true;
              break;
            }
          REQUIRE(moved);
          CHECK((cur.x - chain[k].x).norm() == 0.0);
        }
      }
      ++patches;
    }
  }
  CHECK(patches >= 8);
}

TEST_CASE("conformal relation: identical, gauge pair, broken and v-scale variants") {
  const Scenario s = make_cylinder(3, 1.0, 0.0, dt_form(0.2));
  ProbeDesign d;
  d.base_counts = {3, 3};
  d.fan = 8;
  d.glancing = false;
  d.closure = false;
  const TraceWindow w = window(-2.0, 14.0);
  const auto plan = make_probe_plan(s.model, kU, kV, d, w);
  const BlindedView b0 = blind(synthesize(s.model, kU, kV, plan, w, d));
  const MetricFn h = [&](const Vec& x) { return boundary_metric(s.model, x).g; };
  auto variant = [&](const std::string& mode, double c) {
    ConformalSpec cs;
    cs.mode = mode;
    cs.c = c;
    cs.psi_amplitude = 0.5;
    return make_conformal_variant(s, cs, kU, kV);
  };
  const auto same = check_conformal_relation(b0, b0, h);
  REQUIRE(same.records.size() >= 20);
  CHECK(same.max_discrepancy == 0.0);
  for (const auto& r : same.records) CHECK(r.d1 == r.d2);

  const Scenario gauge = variant("gauge", 0.3);
  const auto g = check_conformal_relation(b0, blind(synthesize(gauge.model, kU, kV, plan, w, d)), h);
  CHECK(g.max_discrepancy <= 1e-6);
  CHECK(!g.flagged);

  const Scenario broken = variant("broken", 0.3);
  const auto br = check_conformal_relation(b0, blind(synthesize(broken.model, kU, kV, plan, w, d)), h);
  CHECK(br.max_discrepancy >= 1e-3);
  CHECK(br.flagged);

  // g -> e^c g on V: phi = -c/2 there, so every record reads n c / 2.
  const Scenario vs = variant("v_scale", 0.4);
  const auto v = check_conformal_relation(b0, blind(synthesize(vs.model, kU, kV, plan, w, d)), h);
  for (const auto& r : v.records) CHECK(r.discrepancy == doctest::Approx(3.0 * 0.4 / 2.0).epsilon(1e-9));

  BlindedView fewer = b0;
  fewer.probes.pop_back();
  CHECK_THROWS_AS(check_conformal_relation(b0, fewer, h), DataError);
}

TEST_CASE("local constancy validator: gauge pair passes, broken variant is flagged") {
  const Scenario s = make_cylinder(3, 1.0);
  const TraceWindow w = window(-2.0, 14.0);
  for (const std::string mode : {"gauge", "broken"}) {
    ConformalSpec cs;
    cs.mode = mode;
    cs.c = 0.3;
    const Scenario v = make_conformal_variant(s, cs, kU, kV);
    const ConstancyReport r = validate_local_constancy(v.model, v.conformal_phi, kU, kV, {3, 3}, w);
    CHECK(r.samples > 100);
    if (mode == "gauge") {
      CHECK(r.max_violation <= 1e-8);
      CHECK(!r.flagged);
    } else {
      CHECK(r.max_violation >= 1e-3);
      CHECK(r.flagged);
    }
  }
}

TEST_CASE("one-form recovery on the cylinder") {
  struct Case {
    OneFormSpec form;
    Vec expect;
    double tol;
  };
  OneFormSpec bump;
  bump.psi_amplitude = 0.4;
  const std::vector<Case> cases = {
      {dt_form(0.3), make_vec({0.3, 0.0}), 1e-2}, {OneFormSpec{}, make_vec({0.0, 0.0}), 1e-6}, {bump, make_vec({0.0, 0.0}), 1e-3}};
  for (const Case& c : cases) {
    const Scenario s = make_cylinder(3, 1.0, 0.0, c.form);
    const BlindedView b = blind(glancing_measurements(s));
    const WeakLensTable t = build_weak_lens(b);
    const RecoverableSets r = detect_recoverable(b);
    const auto& pt = central_point(r);
    const auto cls = fit_conformal_class(pt.x, pt.directions);
    LensPatch patch;
    patch.x = pt.x;
    patch.xi = pt.directions.front();
    const OneFormEstimate e = recover_one_form(b, t, cls, pt.directions, patch);
    REQUIRE(e.ok);
    const double scale = std::max(c.expect.norm(), 1.0);
    CHECK((e.A - c.expect).norm() <= c.tol * scale);
    // The flat null line is t = theta: the exact integral gives A(u) = 0.3 u_t.
    for (const auto& dir : e.directions) CHECK(dir.ok);
    for (const auto& dir : e.directions) CHECK(dir.value == doctest::Approx(c.expect.dot(dir.u)).epsilon(c.tol));
  }
}

TEST_CASE("one-form recovery does not depend on which chain points are used") {
  const Scenario s = make_cylinder(3, 1.0, 0.0, dt_form(0.3));
  const BlindedView b = blind(glancing_measurements(s));
  const WeakLensTable t = build_weak_lens(b);
  const RecoverableSets r = detect_recoverable(b);
  const auto& pt = central_point(r);
  const auto cls = fit_conformal_class(pt.x, pt.directions);
  LensPatch patch;
  patch.x = pt.x;
  OneFormOptions all, even, odd;
  all.min_points = even.min_points = odd.min_points = 2;
  even.stride = odd.stride = 2;
  odd.offset = 1;
  for (const Vec& g : pt.directions) {
    const auto a = recover_one_form_direction(b, t, cls, g, patch, all);
    const auto e = recover_one_form_direction(b, t, cls, g, patch, even);
    const auto o = recover_one_form_direction(b, t, cls, g, patch, odd);
    REQUIRE(a.ok);
    REQUIRE(e.ok);
    CHECK(std::abs(a.value - e.value) <= 1e-3);
    // Odd offsets leave one usable level: compare its slope with the same level of the others.
    REQUIRE(!o.slopes.empty());
    CHECK(o.eps.front() == e.eps.front());
    CHECK(std::abs(o.slopes.front() - e.slopes.front()) <= 1e-3);
    CHECK(std::abs(o.slopes.front() - a.slopes.front()) <= 1e-3);
  }
}

TEST_CASE("metric recovery with a prior on U and on V") {
  const std::vector<Vec> basis = {make_vec({-1.0, 0.1}), make_vec({-1.0, -0.1})};
  const Vec y = make_vec({4.0, pi});
  const TraceWindow w = window(-2.0, 14.0);
  for (double c : {0.0, 0.4}) {
    Scenario s = make_cylinder(3, 1.0);
    if (c != 0.0) {
      ConformalSpec cs;
      cs.mode = "v_scale";
      cs.c = c;
      s = make_conformal_variant(s, cs, kU, kV);
    }
    ProbeDesign d;
    d.glancing = false;
    d.closure = false;
    d.hit_targets = {{y, basis}};
    const BlindedView b = blind(synthesize(s.model, kU, kV, make_probe_plan(s.model, kU, kV, d, w), w, d));
    MetricPrior prior;
    prior.gbar = [&](const Vec& x) { return boundary_metric(s.model, x).g; };
    prior.orientation = [&](const Vec& x, const Vec& xi) { return orientation_of(s.model, x, xi); };
    const MetricRecovery r = recover_metric_with_prior(b, prior, PriorSide::U, y, basis);
    const Mat expect = std::exp(c) * Mat(Eigen::Vector2d(-1.0, 1.0).asDiagonal());
    CHECK((r.gbar - expect).norm() / expect.norm() <= 1e-4);
    CHECK(r.det_factor == doctest::Approx(std::abs(expect.determinant())).epsilon(1e-6));
    CHECK(r.orientation == orientation_of(s.model, y, basis[0]));
    CHECK_THROWS_AS(recover_metric_with_prior(b, prior, PriorSide::U, make_vec({4.0, pi + 0.3}), basis), DataError);
  }
  // Prior on V, metric wanted at a U point.
  const Scenario s = make_product_disc(0.1, 0.0);
  const Vec x = make_vec({1.0, 0.1});
  ProbeDesign d;
  d.glancing = false;
  d.closure = false;
  d.source_targets = {{x, basis}};
  const BlindedView b = blind(synthesize(s.model, kU, kV, make_probe_plan(s.model, kU, kV, d, w), w, d));
  MetricPrior prior;
  prior.gbar = [&](const Vec& p) { return boundary_metric(s.model, p).g; };
  const MetricRecovery r = recover_metric_with_prior(b, prior, PriorSide::V, x, basis);
  const Mat truth = boundary_metric(s.model, x).g;
  CHECK((r.gbar - truth).norm() / truth.norm() <= 1e-4);
  CHECK(r.det_factor == doctest::Approx(std::abs(truth.determinant())).epsilon(1e-6));
}

TEST_CASE("reachable sets: containment, strictness, stabilization and empty V") {
  const Scenario s = make_cylinder(3, 1.0);
  const Region U = cyl_region(0.0, 6.0, -0.5, 0.5);
  auto count = [&](ReachMode mode, double T) {
    return reachable_sets(s.model, U, kV, mode, window(-1.0, T), {4, 4});
  };
  const ReachableSets g4 = count(ReachMode::Gliding, 4.0), b4 = count(ReachMode::Broken, 4.0);
  for (std::size_t i = 0; i < g4.u_in.size(); ++i) CHECK((!g4.u_in[i] || b4.u_in[i]));
  CHECK(b4.u_count() > g4.u_count());
  // Gliding oracle: both flat null lines must reach V.
  for (std::size_t i = 0; i < g4.u_grid.size(); ++i) {
    const Vec& x = g4.u_grid[i];
    CHECK(g4.u_in[i] ==
          (flat_line_reaches(x(0), x(1), 1.0, kV, 4.0) && flat_line_reaches(x(0), x(1), -1.0, kV, 4.0)));
  }
  CHECK(count(ReachMode::Gliding, 16.0).u_count() == count(ReachMode::Gliding, 32.0).u_count());
  const ReachableSets none = reachable_sets(s.model, U, Region{}, ReachMode::Broken, window(-1.0, 8.0), {3, 3});
  CHECK(none.u_count() == 0);
  CHECK(none.v_count() == 0);
}

}  // TEST_SUITE
