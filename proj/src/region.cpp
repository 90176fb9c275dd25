#include "nullglide/region.hpp"

#include <cmath>

namespace nullglide {

bool Region::contains(const Vec& xb) const {
  if (box.empty()) return false;
  for (int a = 0; a < dim(); ++a) {
    double v = xb(a);
    const auto [lo, hi] = box[a];
    const double p = periods.size() > a ? periods(a) : 0.0;
    if (p > 0.0) v = lo + std::fmod(std::fmod(v - lo, p) + p, p);
    if (v < lo || v > hi) return false;
  }
  return true;
}

Vec Region::canonical(const Vec& xb) const {
  Vec out = xb;
  for (int a = 0; a < dim() && a < xb.size(); ++a) {
    const double p = periods.size() > a ? periods(a) : 0.0;
    const double lo = box[a].first;
    if (p > 0.0) out(a) = lo + std::fmod(std::fmod(xb(a) - lo, p) + p, p);
  }
  return out;
}

Vec Region::center() const {
  Vec c(dim());
  for (int a = 0; a < dim(); ++a) c(a) = 0.5 * (box[a].first + box[a].second);
  return c;
}

std::vector<Vec> Region::grid(const std::vector<int>& counts, double inset) const {
  std::vector<Vec> out;
  if (box.empty()) return out;
  const int m = dim();
  std::vector<int> idx(m, 0);
  while (true) {
    Vec p(m);
    for (int a = 0; a < m; ++a) {
      const double lo = box[a].first + inset, hi = box[a].second - inset;
      p(a) = counts[a] > 1 ? lo + (hi - lo) * idx[a] / (counts[a] - 1) : 0.5 * (lo + hi);
    }
    out.push_back(p);
    int a = m - 1;
    while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

bool regions_disjoint(const Region& a, const Region& b, int) {
  if (a.empty() || b.empty()) return true;
  for (int k = 0; k < a.dim(); ++k) {
    const auto [a1, a2] = a.box[k];
    const auto [b1, b2] = b.box[k];
    const double p = a.periods.size() > k ? a.periods(k) : 0.0;
    bool overlap = false;
    if (p > 0.0) {
      const double m0 = std::floor((a1 - b2) / p);
      for (double m = m0; m <= m0 + 2.0 + std::ceil((a2 - a1) / p) && !overlap; m += 1.0)
        overlap = b1 + m * p <= a2 && b2 + m * p >= a1;
    } else {
      overlap = b1 <= a2 && b2 >= a1;
    }
    if (!overlap) return true;
  }
  return false;
}

}  // namespace nullglide
