#pragma once

#include "nullglide/geometry.hpp"
#include "nullglide/region.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nullglide {

struct OneFormSpec {
  std::vector<double> constant;  // interior chart components; empty means zero
  double rotation = 0.0;         // coefficient of (x dy - y dx)
  double psi_amplitude = 0.0;    // adds d(psi) for an interior bump psi
  double psi_radius = 0.35;
  std::vector<double> psi_center;  // spatial center; empty means the axis
};

struct ConformalSpec {
  // none | gauge (phi = c/(n-2) on U, c/n on V) | v_scale (gbar -> e^c gbar on V only)
  // | broken (gauge plus a non-constant term on V)
  std::string mode = "none";
  double c = 0.0;
  double psi_amplitude = 0.0;  // A -> A - d(psi) with psi an interior bump
  double broken_amplitude = 0.1;
  double transition = 0.6;
};

struct ScenarioSpec {
  std::string kind = "cylinder";  // cylinder | product_disc
  std::string name = "cylinder";
  int n = 3;
  double radius = 1.0;
  double lapse_a = 0.0;        // f(t) = 1 + lapse_a t^2
  bool lapse_inverse = false;  // g_tt = -1/f instead of -f
  bool exterior = false;       // domain r >= radius (null-concave boundary)
  double disc_a = 0.1;         // h = (1 + a r^2) e^{2 b x} (dx^2 + dy^2)
  double disc_b = 0.0;
  double potential = 0.0;
  OneFormSpec oneform;
  ConformalSpec conformal;
  Tolerances tol;

  bool operator==(const ScenarioSpec&) const;
};

struct Scenario {
  ScenarioSpec spec;
  ManifoldModel model;
  // Conformal factor applied on top of the base scenario (zero when none).
  ScalarField conformal_phi;
  bool has_flat_oracle = false;
};

struct OracleEvent {
  Vec xb;
  Vec xi_b;
  double xi_n = 0.0;
};

Scenario make_cylinder(int n, double radius, double lapse_a = 0.0, const OneFormSpec& a = {},
                       bool lapse_inverse = false, bool exterior = false);
Scenario make_product_disc(double a = 0.1, double b = 0.0, const OneFormSpec& form = {});
Scenario make_conformal_variant(const Scenario& base, const ConformalSpec& conf, const Region& U,
                                const Region& V);
Scenario build_scenario(const ScenarioSpec& spec, const Region& U = {}, const Region& V = {});

OneFormField make_oneform(int n, const OneFormSpec& spec);

// Straight-line reflection oracle for the flat unit-lapse cylinder; forward convention.
std::vector<OracleEvent> flat_cylinder_events(const ScenarioSpec& spec, const Vec& xb, const Vec& xi_b,
                                              int count);
// Radial-angle chord formula (n = 3, unit lapse): {dt, dtheta} for one chord.
std::pair<double, double> chord_increment(double radius, const Vec& xi_b);

std::vector<Vec> boundary_sample_grid(const Scenario& s, int nt, int nangle);

}  // namespace nullglide
