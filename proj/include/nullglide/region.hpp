#pragma once

#include "nullglide/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace nullglide {

// Axis-aligned box in boundary chart coordinates; periodic axes compare modulo their period.
struct Region {
  std::vector<std::pair<double, double>> box;
  Vec periods;

  int dim() const { return static_cast<int>(box.size()); }
  bool empty() const { return box.empty(); }
  bool contains(const Vec& xb) const;
  // Periodic axes wrapped into [lo, lo + period).
  Vec canonical(const Vec& xb) const;
  Vec center() const;
  // Tensor grid with counts[a] points per axis (endpoints included when counts[a] > 1).
  std::vector<Vec> grid(const std::vector<int>& counts, double inset = 0.0) const;
};

bool regions_disjoint(const Region& a, const Region& b, int samples = 9);

}  // namespace nullglide
