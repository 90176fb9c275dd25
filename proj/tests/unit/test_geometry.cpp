#include <doctest.h>

#include "nullglide/geometry.hpp"
#include "nullglide/scenarios.hpp"
#include "support.hpp"

using namespace nullglide;
using namespace testing_support;

TEST_SUITE("geometry") {

TEST_CASE("metric_eval on the flat cylinder is Minkowski with vanishing Christoffels") {
  const Scenario s = make_cylinder(3, 1.0);
  const MetricEval m = metric_eval(s.model, make_vec({0.3, 0.2, -0.1}));
  CHECK(m.g(0, 0) == -1.0);
  CHECK(m.g(1, 1) == 1.0);
  CHECK(m.g(2, 2) == 1.0);
  CHECK((m.g * m.g_inv - Mat::Identity(3, 3)).norm() <= 1e-12);
  for (int k = 0; k < 3; ++k) CHECK(m.christoffel[k].norm() == 0.0);
}

TEST_CASE("lapse metric at t = 1 with f = 1 + t^2") {
  const Scenario s = make_cylinder(3, 1.0, 1.0);
  const MetricEval m = metric_eval(s.model, make_vec({1.0, 0.1, 0.2}));
  CHECK(m.g(0, 0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(m.dg[0](0, 0) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("product disc reduces to Minkowski at the center") {
  const Scenario s = make_product_disc(0.1, 0.0);
  const MetricEval m = metric_eval(s.model, make_vec({0.7, 0.0, 0.0}));
  Mat want = Mat::Identity(3, 3);
  want(0, 0) = -1.0;
  CHECK((m.g - want).norm() == 0.0);
}

TEST_CASE("finite-difference metric derivatives agree with the analytic closure to O(h^2)") {
  const Scenario s = make_product_disc(0.1, 0.4);
  const Vec x = make_vec({0.2, 0.3, -0.4});
  const MatDerivs a = s.model.metric.derivatives(x);
  const MatDerivs f = s.model.metric.fd_derivatives(x);
  for (int l = 0; l < 3; ++l) CHECK((a[l] - f[l]).norm() <= 1e-9);
}

TEST_CASE("Christoffel symbols of a conformally flat spatial metric") {
  const double a = 0.1, b = 0.4;
  const Scenario s = make_product_disc(a, b);
  const Vec x = make_vec({0.0, 0.3, -0.4});
  const MetricEval m = metric_eval(s.model, x);
  // Gamma^i_jk = 1/2 (delta_ij d_k u + delta_ik d_j u - delta_jk d_i u), u = log c, spatial indices.
  const double r2 = x(1) * x(1) + x(2) * x(2);
  Vec du = Vec::Zero(3);
  du(1) = 2.0 * a * x(1) / (1.0 + a * r2) + 2.0 * b;
  du(2) = 2.0 * a * x(2) / (1.0 + a * r2);
  for (int i = 1; i < 3; ++i)
    for (int j = 1; j < 3; ++j)
      for (int k = 1; k < 3; ++k) {
        const double want = 0.5 * ((i == j) * du(k) + (i == k) * du(j) - (j == k) * du(i));
        CHECK(m.christoffel[i](j, k) == doctest::Approx(want).epsilon(1e-12));
      }
  CHECK(m.christoffel[0].norm() == 0.0);
}

TEST_CASE("metric_eval errors") {
  Scenario s = make_cylinder(3, 1.0);
  Vec bad = make_vec({0.0, std::nan(""), 0.0});
  CHECK_THROWS_AS(metric_eval(s.model, bad), DomainError);
  s.model.metric = MetricField(3, [](const Vec&) { return Mat(Mat::Zero(3, 3)); });
  CHECK_THROWS_AS(metric_eval(s.model, make_vec({0, 0, 0})), DomainError);
}

TEST_CASE("classify_covector examples") {
  const Scenario s = make_cylinder(3, 1.0);
  const Vec x = make_vec({0.0, 0.0});
  const BoundaryCovector h = classify_covector(s.model, x, make_vec({1.0, 0.5}));
  CHECK(h.cls == CovectorClass::Hyperbolic);
  CHECK(boundary_metric(s.model, x).g_inv.isApprox(Mat(Eigen::Vector2d(-1, 1).asDiagonal())));
  CHECK(h.covec.dot(boundary_metric(s.model, x).g_inv * h.covec) == doctest::Approx(-0.75));
  CHECK(h.orientation == Orientation::Past);
  CHECK(classify_covector(s.model, x, make_vec({1.0, 1.0})).cls == CovectorClass::Glancing);
  CHECK(classify_covector(s.model, x, make_vec({1.0, 2.0})).cls == CovectorClass::Elliptic);
  CHECK(classify_covector(s.model, x, make_vec({1.0, 2.0})).orientation == Orientation::None);
  CHECK(classify_covector(s.model, x, make_vec({-1.0, 0.2})).orientation == Orientation::Future);
  CHECK_THROWS_AS(classify_covector(s.model, x, make_vec({0.0, 0.0})), ClassificationError);
}

TEST_CASE("classification is invariant under positive rescaling") {
  const Scenario s = make_product_disc();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), scale(0.01, 100.0);
  for (int i = 0; i < 200; ++i) {
    const Vec x = make_vec({u(rng), 3.0 * u(rng)});
    const Vec xi = make_vec({u(rng), u(rng)});
    const double t = scale(rng);
    const auto a = classify_covector(s.model, x, xi);
    const auto b = classify_covector(s.model, x, Vec(t * xi));
    CHECK(a.cls == b.cls);
    CHECK(a.orientation == b.orientation);
  }
}

TEST_CASE("lift_to_null examples") {
  const Scenario s = make_cylinder(3, 1.0);
  const Vec x = make_vec({0.0, 0.0});
  const auto bc = classify_covector(s.model, x, make_vec({-1.0, 0.0}));
  const PhasePoint in = lift_to_null(s.model, bc, Side::Inward);
  CHECK(normal_component(s.model, in.x, in.xi) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(principal_symbol(s.model, in)) <= 1e-14);
  // Cartesian oracle: inward normal at theta = 0 is -e_x, so xi = (-1, -1, 0).
  CHECK((in.xi - make_vec({-1.0, -1.0, 0.0})).norm() <= 1e-15);
  const auto h = classify_covector(s.model, x, make_vec({1.0, 0.5}));
  const PhasePoint out = lift_to_null(s.model, h, Side::Outward);
  CHECK(normal_component(s.model, out.x, out.xi) == doctest::Approx(-std::sqrt(0.75)).epsilon(1e-14));
  const auto g = classify_covector(s.model, x, make_vec({1.0, 1.0}));
  const PhasePoint gl = lift_to_null(s.model, g, Side::Outward);
  CHECK(std::abs(normal_component(s.model, gl.x, gl.xi)) <= 1e-15);
  CHECK_THROWS_AS(lift_to_null(s.model, classify_covector(s.model, x, make_vec({1.0, 2.0})), Side::Inward),
                  ClassificationError);
}

TEST_CASE("hyperbolic lifts differ only by the normal sign and round-trip through projection") {
  for (const Scenario& s : {make_cylinder(3, 1.3, 0.1), make_product_disc(0.1, 0.0), make_cylinder(4, 1.0)}) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    while (checked < 50) {
      Vec xb(s.model.n - 1), xi(s.model.n - 1);
      for (int a = 0; a < xb.size(); ++a) {
        xb(a) = 2.0 * u(rng);
        xi(a) = 0.3 * u(rng);
      }
      if (s.model.n == 4) xb(1) = pi / 2 + 0.5 * u(rng);
      xi(0) = u(rng) > 0 ? 1.0 : -1.0;
      const auto bc = classify_covector(s.model, xb, xi);
      if (bc.cls != CovectorClass::Hyperbolic) continue;
      ++checked;
      const PhasePoint a = lift_to_null(s.model, bc, Side::Inward);
      const PhasePoint b = lift_to_null(s.model, bc, Side::Outward);
      const double na = normal_component(s.model, a.x, a.xi), nb = normal_component(s.model, b.x, b.xi);
      CHECK(na > 0.0);
      CHECK(na == doctest::Approx(-nb).epsilon(1e-12));
      CHECK(shell_residual(s.model, a) <= 1e-12);
      CHECK(shell_residual(s.model, b) <= 1e-12);
      CHECK((tangential_project(s.model, a, &xb).covec - xi).norm() <= 1e-12);
      CHECK((tangential_project(s.model, b, &xb).covec - xi).norm() <= 1e-12);
      CHECK((tangential_project(s.model, a, &xb).base - xb).norm() <= 1e-12);
    }
  }
}

TEST_CASE("tangential_project examples") {
  const Scenario s = make_cylinder(3, 1.0);
  const Vec x = make_vec({0.0, 0.0});
  const PhasePoint in = lift_to_null(s.model, classify_covector(s.model, x, make_vec({-1.0, 0.0})), Side::Inward);
  CHECK((tangential_project(s.model, in).covec - make_vec({-1.0, 0.0})).norm() <= 1e-15);
  PhasePoint flipped = in;
  flipped.xi = in.xi - 2.0 * normal_component(s.model, in.x, in.xi) * (s.model.metric(in.x) * inward_normal(s.model, in.x));
  CHECK((tangential_project(s.model, flipped).covec - make_vec({-1.0, 0.0})).norm() <= 1e-15);
  // Off-shell covector on the boundary at theta = 0: tangential part (1, 0.5), arbitrary normal part.
  const PhasePoint off{s.model.chart->embed(x), make_vec({1.0, 7.0, 0.5})};
  CHECK((tangential_project(s.model, off).covec - make_vec({1.0, 0.5})).norm() <= 1e-15);
  CHECK_THROWS_AS(tangential_project(s.model, PhasePoint{make_vec({0.0, 0.2, 0.0}), make_vec({1, 0, 0})}),
                  DomainError);
}

TEST_CASE("second fundamental form of round cylinders") {
  const Scenario unit = make_cylinder(3, 1.0);
  const ConvexitySample c = null_convexity(unit.model, make_vec({0.0, 0.4}), make_vec({1.0, 1.0}));
  CHECK(c.second_fundamental_form == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.relative_mismatch <= 1e-6);
  CHECK(c.hp2_phi == doctest::Approx(-4.0).epsilon(1e-10));
  const Scenario r2 = make_cylinder(3, 2.0);
  const ConvexitySample c2 = null_convexity(r2.model, make_vec({0.3, 1.1}), make_vec({1.0, 0.5}));
  CHECK(c2.second_fundamental_form == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c2.relative_mismatch <= 1e-6);
  CHECK_THROWS_AS(null_convexity(unit.model, make_vec({0.0, 0.0}), make_vec({1.0, 0.5})), ClassificationError);
}

TEST_CASE("product disc second fundamental form matches the conformal curvature formula") {
  // gbar null tangent with unit spatial part: II = kappa_h = e^{-u} (1 + d_r u), u = log sqrt(c).
  const double a = 0.1;
  for (double b : {0.0, 0.3}) {
    const Scenario s = make_product_disc(a, b);
    for (double th : {0.0, 1.0, 2.5, 4.0}) {
      const Vec xb = make_vec({0.2, th});
      const double c = (1.0 + a) * std::exp(2.0 * b * std::cos(th));
      const double u = 0.5 * std::log(c);
      const double dru = a / (1.0 + a) + b * std::cos(th);
      const double want = std::exp(-u) * (1.0 + dru);
      for (double sgn : {1.0, -1.0}) {
        const ConvexitySample cs = null_convexity(s.model, xb, make_vec({1.0, sgn / std::sqrt(c)}));
        CHECK(cs.second_fundamental_form == doctest::Approx(want).epsilon(1e-9));
        CHECK(cs.relative_mismatch <= 1e-6);
        CHECK(cs.hp2_phi < 0.0);
      }
    }
  }
}

TEST_CASE("H_p^2 phi_b is negative at sampled glancing covectors of admissible models") {
  for (const Scenario& s : {make_cylinder(3, 1.0, 0.1), make_product_disc(), make_cylinder(4, 1.5)}) {
    for (const Vec& xb : boundary_sample_grid(s, 3, 5)) {
      std::vector<double> angles{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
      for (const Vec& v : null_boundary_vectors(s.model, xb, angles)) {
        const ConvexitySample c = null_convexity(s.model, xb, v);
        CHECK(c.hp2_phi < 0.0);
        CHECK(c.relative_mismatch <= 1e-6);
      }
    }
  }
}

TEST_CASE("check_admissibility examples") {
  const Scenario unit = make_cylinder(3, 1.0);
  const auto rep = check_admissibility(unit.model, boundary_sample_grid(unit, 3, 8));
  CHECK(rep.pass);
  CHECK(rep.min_second_fundamental_form == doctest::Approx(1.0).epsilon(1e-10));
  const Scenario ext = make_cylinder(3, 1.0, 0.0, {}, false, true);
  const auto bad = check_admissibility(ext.model, boundary_sample_grid(ext, 3, 8));
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_second_fundamental_form == doctest::Approx(-1.0).epsilon(1e-10));
  for (const auto& p : bad.points) {
    CHECK(p.dtau_timelike);
    CHECK(p.boundary_lorentzian);
    CHECK_FALSE(p.convex);
  }
  const Scenario disc = make_product_disc();
  CHECK(check_admissibility(disc.model, boundary_sample_grid(disc, 3, 12)).pass);
  const Scenario bent = make_product_disc(0.1, 2.0);
  CHECK_FALSE(check_admissibility(bent.model, boundary_sample_grid(bent, 3, 12)).pass);
  const Scenario four = make_cylinder(4, 2.0);
  const auto r4 = check_admissibility(four.model, boundary_sample_grid(four, 2, 6));
  CHECK(r4.pass);
  CHECK(r4.min_second_fundamental_form == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("semi-geodesic chart on the flat cylinder is the radial straight line") {
  const Scenario s = make_cylinder(3, 1.0);
  const SemiGeodesicChart ch = semi_geodesic_chart(s.model, make_vec({0.0, 0.3}), 0.5);
  CHECK(ch.max_block_residual() <= 1e-8);
  const Vec p = ch.map(make_vec({0.4, 0.3}), 0.25);
  CHECK((p - make_vec({0.4, 0.75 * std::cos(0.3), 0.75 * std::sin(0.3)})).norm() <= 1e-12);
  const Mat g = ch.pulled_back_metric(make_vec({0.4, 0.3}), 0.25);
  CHECK(g(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("semi-geodesic chart block form on the product disc") {
  const Scenario s = make_product_disc();
  const SemiGeodesicChart ch = semi_geodesic_chart(s.model, make_vec({0.0, 0.7}), 0.4);
  CHECK(ch.max_block_residual() <= 1e-8);
}

TEST_CASE("semi-geodesic chart detects focusing") {
  const Scenario s = make_cylinder(3, 1.0);
  CHECK_THROWS_AS(semi_geodesic_chart(s.model, make_vec({0.0, 0.0}), 1.2), CausticError);
}

}  // TEST_SUITE
