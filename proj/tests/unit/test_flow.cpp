#include <doctest.h>

#include "nullglide/flow.hpp"
#include "nullglide/scenarios.hpp"
#include "support.hpp"

#include <sstream>

using namespace nullglide;
using namespace testing_support;

namespace {

TraceWindow tau_window(double tau_max) {
  TraceWindow w;
  w.tau_max = tau_max;
  return w;
}

// Chord oracle for the unit-lapse cylinder of radius r, independent of the library:
// xi_theta = r |xi_t| sin(beta), chord subtends pi - 2 beta and lasts 2 r cos(beta).
std::pair<double, double> chord(double r, double xi_t, double xi_th) {
  const double beta = std::asin(xi_th / (r * std::abs(xi_t)));
  const double dir = (xi_t < 0 ? 1.0 : -1.0) * (xi_th < 0 ? -1.0 : 1.0);
  return {2.0 * r * std::cos(beta), dir * (pi - 2.0 * std::abs(beta))};
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("hamiltonian_rhs on Minkowski is -2 g^{-1} xi with constant covector") {
  const Scenario s = make_cylinder(3, 1.0);
  const PhaseVelocity v = hamiltonian_rhs(s.model, {make_vec({0.1, 0.2, 0.3}), make_vec({-1.0, 1.0, 0.0})});
  CHECK((v.xdot - make_vec({-2.0, -2.0, 0.0})).norm() == 0.0);
  CHECK(v.xidot.norm() == 0.0);
}

TEST_CASE("hamiltonian_rhs for the lapse metric: d(tau)/ds = f'/f^2 tau^2") {
  const Scenario s = make_cylinder(3, 1.0, 1.0);
  const double tau = 0.7;
  const PhaseVelocity v = hamiltonian_rhs(s.model, {make_vec({1.0, 0.0, 0.0}), make_vec({tau, 0.3, 0.0})});
  const double f = 2.0, fp = 2.0;
  CHECK(v.xidot(0) == doctest::Approx(fp / (f * f) * tau * tau).epsilon(1e-14));
  CHECK(v.xdot(0) == doctest::Approx(-2.0 * (-1.0 / f) * tau).epsilon(1e-14));
}

TEST_CASE("hamiltonian_rhs at the product disc center is a straight line") {
  const Scenario s = make_product_disc();
  const PhaseVelocity v = hamiltonian_rhs(s.model, {make_vec({0.0, 0.0, 0.0}), make_vec({-1.0, 1.0, 0.0})});
  CHECK((v.xdot - make_vec({-2.0, -2.0, 0.0})).norm() <= 1e-15);
  CHECK(v.xidot.norm() <= 1e-15);
}

TEST_CASE("the four lift/direction choices select one forward branch") {
  const Scenario s = make_cylinder(3, 1.0);
  for (double xt : {-1.0, 1.0}) {
    const auto bc = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({xt, 0.3}));
    const auto choices = enumerate_lift_choices(s.model, bc);
    int selected = 0;
    for (const auto& c : choices) {
      if (c.enters_interior && c.causal_future) {
        ++selected;
        CHECK(c.sgn == forward_sign(bc.orientation, true));
        CHECK((c.side == Side::Inward) == (c.sgn < 0.0));
      }
    }
    CHECK(selected == 1);
  }
}

TEST_CASE("integrate_arc radial chord and oblique chord") {
  const Scenario s = make_cylinder(3, 1.0);
  const auto bc = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 0.0}));
  const PhasePoint p0 = lift_to_null(s.model, bc, Side::Inward);
  const ArcResult r = integrate_arc(s.model, p0, -1.0, 0.0, {});
  REQUIRE(r.exit);
  CHECK(r.reason == StopReason::BoundaryHit);
  CHECK(r.exit->x(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK((r.exit->x.tail(2) - make_vec({-1.0, 0.0})).norm() <= 1e-12);
  CHECK(std::abs(s.model.bdefun(r.exit->x)) <= 1e-13);

  const double beta = pi / 4;
  const auto ob = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, std::sin(beta)}));
  const ArcResult r2 = integrate_arc(s.model, lift_to_null(s.model, ob, Side::Inward), -1.0, 0.0, {});
  REQUIRE(r2.exit);
  CHECK(r2.exit->x(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::atan2(r2.exit->x(2), r2.exit->x(1)) == doctest::Approx(pi / 2).epsilon(1e-12));
}

TEST_CASE("integrate_arc rejects glancing starts") {
  const Scenario s = make_cylinder(3, 1.0);
  const auto g = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 1.0}));
  CHECK_THROWS_AS(integrate_arc(s.model, lift_to_null(s.model, g, Side::Inward), -1.0, 0.0, {}), TangencyError);
}

TEST_CASE("reflect examples") {
  const Scenario s = make_cylinder(3, 1.0);
  const Vec xb = make_vec({0.0, 0.0});
  const PhasePoint out = lift_to_null(s.model, classify_covector(s.model, xb, make_vec({-1.0, 0.0})), Side::Outward);
  const PhasePoint r = reflect(s.model, out);
  CHECK(normal_component(s.model, r.x, r.xi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((tangential_project(s.model, r).covec - make_vec({-1.0, 0.0})).norm() <= 1e-15);
  CHECK(std::abs(principal_symbol(s.model, r)) <= 1e-15);
  const PhasePoint rr = reflect(s.model, r);
  CHECK((rr.xi - out.xi).norm() == 0.0);
  const PhasePoint gl = lift_to_null(s.model, classify_covector(s.model, xb, make_vec({-1.0, 1.0})), Side::Inward);
  CHECK_THROWS_AS(reflect(s.model, gl), TangencyError);
}

TEST_CASE("trace_broken radial bounces") {
  const Scenario s = make_cylinder(3, 1.0);
  for (double xt : {-1.0, 1.0}) {
    const auto src = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({xt, 0.0}));
    const BrokenTrajectory tr = trace_broken(s.model, src, tau_window(10.0));
    REQUIRE(tr.events.size() == 5);
    for (int k = 0; k < 5; ++k) {
      const auto& ev = tr.events[k];
      CHECK(ev.xb(0) == doctest::Approx(2.0 * (k + 1)).epsilon(1e-11));
      CHECK(std::abs(angle_gap(ev.xb(1), k % 2 == 0 ? pi : 0.0)) <= 1e-10);
      CHECK((ev.covector.covec - make_vec({xt, 0.0})).norm() <= 1e-10);
      CHECK(ev.tau == doctest::Approx(2.0 * (k + 1)).epsilon(1e-11));
    }
    CHECK(tr.truncated);
  }
}

TEST_CASE("trace_broken oblique bounces match the chord oracle") {
  for (double r : {1.0, 2.0}) {
    const Scenario s = make_cylinder(3, r);
    for (double xth : {r * std::sin(pi / 4), -0.3, 0.9 * r}) {
      const auto [dt, dth] = chord(r, -1.0, xth);
      const auto src = classify_covector(s.model, make_vec({0.5, 0.2}), make_vec({-1.0, xth}));
      const BrokenTrajectory tr = trace_broken(s.model, src, tau_window(12.0));
      REQUIRE(!tr.events.empty());
      for (std::size_t k = 0; k < tr.events.size(); ++k) {
        CHECK(tr.events[k].xb(0) == doctest::Approx(0.5 + dt * (k + 1)).epsilon(1e-10));
        CHECK(std::abs(angle_gap(tr.events[k].xb(1), 0.2 + dth * (k + 1))) <= 1e-9);
      }
    }
  }
}

TEST_CASE("flat oracle pack agrees with the traced events in n = 3 and n = 4") {
  for (int n : {3, 4}) {
    const Scenario s = make_cylinder(n, 1.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      Vec xb(n - 1), xi(n - 1);
      xb(0) = u(rng);
      xi(0) = u(rng) > 0 ? 1.0 : -1.0;
      if (n == 3) {
        xb(1) = 3 * u(rng);
        xi(1) = 1.4 * u(rng);
      } else {
        xb(1) = pi / 2 + 0.4 * u(rng);
        xb(2) = 3 * u(rng);
        xi(1) = u(rng);
        xi(2) = u(rng);
      }
      const auto src = classify_covector(s.model, xb, xi);
      if (src.cls != CovectorClass::Hyperbolic) continue;
      TraceWindow w;
      w.max_events = 6;
      const BrokenTrajectory tr = trace_broken(s.model, src, w);
      const auto oracle = flat_cylinder_events(s.spec, xb, xi, 6);
      REQUIRE(tr.events.size() == 6);
      for (int k = 0; k < 6; ++k) {
        CHECK((tr.events[k].xb - oracle[k].xb).norm() <= 1e-9);
        CHECK((tr.events[k].covector.covec - oracle[k].xi_b).norm() <= 1e-9);
        CHECK(tr.events[k].xi_n == doctest::Approx(oracle[k].xi_n).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("broken trajectory invariants: shell, reflection law, monotone tau") {
  for (const Scenario& s : {make_cylinder(3, 1.0, 0.1), make_product_disc(), make_cylinder(4, 1.0, 0.1)}) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int done = 0;
    while (done < 10) {
      Vec xb = Vec::Zero(s.model.n - 1), xi = Vec::Zero(s.model.n - 1);
      xb(1) = 3 * u(rng);
      if (s.model.n == 4) xb(1) = pi / 2 + 0.3 * u(rng);
      xi(0) = -1.0;
      for (int a = 1; a < xi.size(); ++a) xi(a) = 0.6 * u(rng);
      const auto src = classify_covector(s.model, xb, xi);
      if (src.cls != CovectorClass::Hyperbolic) continue;
      ++done;
      TraceWindow w;
      w.max_events = 12;
      const BrokenTrajectory tr = trace_broken(s.model, src, w);
      CHECK(tr.max_shell_residual <= 1e-8);
      double last_tau = -1e300;
      for (const auto& arc : tr.arcs)
        for (const auto& nd : arc.nodes) {
          const double tau = s.model.temporal(Vec(nd.y.head(s.model.n)));
          CHECK(tau >= last_tau);
          last_tau = tau;
        }
      for (const auto& ev : tr.events) {
        const Mat j = s.model.chart->jacobian(ev.xb);
        CHECK((j.transpose() * (ev.incoming.xi - ev.outgoing.xi)).norm() <= 1e-12 * ev.incoming.xi.norm());
        CHECK(normal_component(s.model, ev.incoming.x, ev.incoming.xi) < 0.0);
        CHECK(normal_component(s.model, ev.outgoing.x, ev.outgoing.xi) > 0.0);
        CHECK(std::abs(principal_symbol(s.model, ev.outgoing) - principal_symbol(s.model, ev.incoming)) <=
              1e-12 * ev.incoming.xi.squaredNorm());
      }
    }
  }
}

TEST_CASE("gliding ray on the flat cylinder follows t = theta") {
  const Scenario s = make_cylinder(3, 1.0);
  const auto src = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 1.0}));
  const GlidingRay ray = trace_gliding(s.model, src, tau_window(20.0));
  REQUIRE(ray.samples.size() > 10);
  for (const auto& g : ray.samples) CHECK(std::abs(g.xb(0) - g.xb(1)) <= 1e-12);
  CHECK(ray.samples.back().xb(0) >= 19.0);
  CHECK(ray.max_shell_residual <= 1e-8);
}

TEST_CASE("gliding ray on lapse cylinders") {
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(5.0 * i / 4000);
  const double h = grid[1] - grid[0];
  for (bool inverse : {false, true}) {
    const Scenario s = make_cylinder(3, 1.0, 0.1, {}, inverse);
    const auto src = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 1.0}));
    REQUIRE(src.cls == CovectorClass::Glancing);
    FlowOptions opt;
    opt.tol_ode = 1e-12;
    const GlidingRay ray = trace_gliding(s.model, src, {}, opt, grid);
    REQUIRE(ray.samples.size() == grid.size());
    std::vector<double> c;
    for (std::size_t i = 1; i + 1 < ray.samples.size(); i += 100) {
      const double tdot = (ray.samples[i + 1].xb(0) - ray.samples[i - 1].xb(0)) / (2 * h);
      const double t = ray.samples[i].xb(0);
      const double f = 1.0 + 0.1 * t * t;
      // g = -f dt^2: tdot sqrt(f) is conserved. g = -dt^2 / f: tdot = C sqrt(f).
      c.push_back(inverse ? tdot / std::sqrt(f) : tdot * std::sqrt(f));
    }
    for (double v : c) CHECK(v == doctest::Approx(c.front()).epsilon(1e-6));
    CHECK(ray.samples.back().xb(0) > 3.0);
  }
}

TEST_CASE("boundary_null_geodesic on the flat cylinder and conformal invariance of its trace") {
  const Scenario s = make_cylinder(3, 1.0);
  const BoundaryCurve c = boundary_null_geodesic(s.model, make_vec({0.0, 0.0}), make_vec({1.0, 1.0}), tau_window(10.0));
  for (const auto& p : c.samples) CHECK(std::abs(p.xb(0) - p.xb(1)) <= 1e-12);
  Region U{{{-1, 1}, {-0.5, 0.5}}, s.model.chart->periods()};
  Region V{{{-1, 12}, {pi - 0.5, pi + 0.5}}, s.model.chart->periods()};
  ConformalSpec conf;
  conf.mode = "v_scale";
  conf.c = 0.4;
  const Scenario v = make_conformal_variant(s, conf, U, V);
  const BoundaryCurve cv = boundary_null_geodesic(v.model, make_vec({0.0, 0.0}), make_vec({1.0, 1.0}), tau_window(10.0));
  REQUIRE(cv.samples.size() > 5);
  for (const auto& p : cv.samples) CHECK(std::abs(p.xb(0) - p.xb(1)) <= 1e-9);
  CHECK_THROWS_AS(boundary_null_geodesic(s.model, make_vec({0.0, 0.0}), make_vec({1.0, 0.5}), {}), ClassificationError);
}

TEST_CASE("trace_gliding agrees with the boundary null geodesic") {
  for (const Scenario& s : {make_cylinder(3, 1.0, 0.1), make_cylinder(3, 1.0, 0.1, {}, true), make_product_disc()}) {
    for (double th : {0.0, 1.3}) {
      for (const Vec& xi : null_boundary_covectors(s.model, make_vec({0.0, th}), {})) {
        const auto src = classify_covector(s.model, make_vec({0.0, th}), xi);
        FlowOptions opt;
        opt.tol_ode = 1e-12;
        CHECK(gliding_geodesic_deviation(s.model, src, 20.0, opt) <= 1e-8);
      }
    }
  }
}

TEST_CASE("convergence probe distances decrease with eps") {
  const Scenario s = make_cylinder(3, 1.0);
  const auto src = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 1.0}));
  const ConvergenceTable t = convergence_probe(s.model, src, {1e-1, 1e-2, 1e-3, 0.0}, 4.0);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].distance > t.rows[1].distance);
  CHECK(t.rows[1].distance > t.rows[2].distance);
  CHECK(t.rows[3].distance <= 1e-9);
  for (const auto& row : t.rows)
    for (double d : row.event_distance) CHECK(d <= row.distance);
}

TEST_CASE("trajectory and event CSV layout") {
  const Scenario s = make_cylinder(3, 1.0);
  const auto src = classify_covector(s.model, make_vec({0.0, 0.0}), make_vec({-1.0, 0.0}));
  const BrokenTrajectory tr = trace_broken(s.model, src, tau_window(4.5));
  std::ostringstream a, b;
  write_trajectory_csv(a, 7, tr, true);
  write_event_csv(b, 7, tr, true);
  CHECK(a.str().rfind("traj_id,arc_id,s,x0,x1,x2,xi0,xi1,xi2,p_residual\n", 0) == 0);
  CHECK(b.str().rfind("traj_id,k,s_k,xb0,xb1,xib0,xib1,xi_n,tau\n", 0) == 0);
  const std::string ev = b.str();
  CHECK(std::count(ev.begin(), ev.end(), '\n') == 3);
}

}  // TEST_SUITE
