#pragma once

#include "nullglide/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace testing_support {

using nullglide::Vec;
using nullglide::make_vec;

inline constexpr double pi = std::numbers::pi;

// Angle difference reduced to (-pi, pi].
inline double angle_gap(double a, double b) { return std::remainder(a - b, 2.0 * pi); }

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

}  // namespace testing_support
