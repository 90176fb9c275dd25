#pragma once

#include "nullglide/model.hpp"
#include "nullglide/region.hpp"

namespace nullglide {

// g -> e^{-2 phi} g, A -> A - d psi, q -> e^{2 phi}(q + q_phi). No constancy checks.
ManifoldModel apply_gauge(const ManifoldModel& model, const ScalarField& phi, const ScalarField& psi,
                          bool carry_potential = true);

// Checked form: phi = c/(n-2) on U, phi = c/n on V and psi = 0 on U and V at sampled points.
ManifoldModel gauge_transform(const ManifoldModel& model, const ScalarField& phi, const ScalarField& psi,
                              const Region& U, const Region& V, double c, int samples = 7);

// q_phi = e^{(n-2) phi / 2} box_g e^{(2-n) phi / 2}
double potential_correction(const ManifoldModel& model, const ScalarField& phi, const Vec& x);

// Smooth compactly supported bump in the spatial variables, modulated in t.
ScalarField interior_bump(int n, const Vec& center, double radius, double amplitude);

// phi = lo + (hi - lo) * S(u), u = x^1 / radius, S a smooth step from 0 (u <= -w) to 1 (u >= w).
ScalarField axial_step(int n, double radius, double lo, double hi, double w);

}  // namespace nullglide
