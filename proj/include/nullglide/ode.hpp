#pragma once

#include "nullglide/types.hpp"

#include <array>
#include <functional>
#include <limits>

namespace nullglide {

using OdeRhs = std::function<Vec(double, const Vec&)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_init = 1e-3;
  double h_max = 0.1;
  double h_min = 1e-14;
};

// One accepted Dormand-Prince step with its continuous extension.
struct DenseStep {
  double s0 = 0.0;
  double h = 0.0;
  Vec y0, y1, f0, f1;
  std::array<Vec, 5> rc;

  Vec at(double s) const;
};

class DormandPrince45 {
 public:
  DormandPrince45(OdeRhs rhs, double s0, const Vec& y0, const OdeOptions& opt);

  // Takes one accepted step no longer than h_cap.
  const DenseStep& step(double h_cap = std::numeric_limits<double>::infinity());
  // Replaces the current state (after a projection) and refreshes the stored derivative.
  void reset_state(const Vec& y);

  double s() const { return s_; }
  const Vec& y() const { return y_; }
  const Vec& f() const { return f_; }
  double suggested_step() const { return h_; }
  const OdeRhs& rhs() const { return rhs_; }

  // Fifth-order solution of a single untested step of size h from (s, y) with slope f.
  static Vec trial(const OdeRhs& rhs, double s, const Vec& y, const Vec& f, double h);

 private:
  OdeRhs rhs_;
  OdeOptions opt_;
  double s_;
  Vec y_, f_;
  double h_;
  DenseStep last_;
};

}  // namespace nullglide
