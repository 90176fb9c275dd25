#include "nullglide/ode.hpp"

#include <algorithm>
#include <cmath>

namespace nullglide {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Stages {
  Vec k2, k3, k4, k5, k6, y1, k7;
};

Stages stages(const OdeRhs& f, double s, const Vec& y, const Vec& k1, double h) {
  Stages st;
  st.k2 = f(s + c2 * h, y + h * a21 * k1);
  st.k3 = f(s + c3 * h, y + h * (a31 * k1 + a32 * st.k2));
  st.k4 = f(s + c4 * h, y + h * (a41 * k1 + a42 * st.k2 + a43 * st.k3));
  st.k5 = f(s + c5 * h, y + h * (a51 * k1 + a52 * st.k2 + a53 * st.k3 + a54 * st.k4));
  st.k6 = f(s + h, y + h * (a61 * k1 + a62 * st.k2 + a63 * st.k3 + a64 * st.k4 + a65 * st.k5));
  st.y1 = y + h * (a71 * k1 + a73 * st.k3 + a74 * st.k4 + a75 * st.k5 + a76 * st.k6);
  return st;
}

}  // namespace

Vec DenseStep::at(double s) const {
  const double th = (s - s0) / h;
  const double th1 = 1.0 - th;
  return rc[0] + th * (rc[1] + th1 * (rc[2] + th * (rc[3] + th1 * rc[4])));
}

DormandPrince45::DormandPrince45(OdeRhs rhs, double s0, const Vec& y0, const OdeOptions& opt)
    : rhs_(std::move(rhs)), opt_(opt), s_(s0), y_(y0), h_(opt.h_init) {
  f_ = rhs_(s_, y_);
}

void DormandPrince45::reset_state(const Vec& y) {
  y_ = y;
  f_ = rhs_(s_, y_);
}

Vec DormandPrince45::trial(const OdeRhs& rhs, double s, const Vec& y, const Vec& f, double h) {
  if (h == 0.0) return y;
  return stages(rhs, s, y, f, h).y1;
}

const DenseStep& DormandPrince45::step(double h_cap) {
  double h = std::min({h_, opt_.h_max, h_cap});
  while (true) {
    if (!(h >= opt_.h_min) && h < h_cap) throw TangencyError("step size underflow");
    Stages st = stages(rhs_, s_, y_, f_, h);
    st.k7 = rhs_(s_ + h, st.y1);
    const Vec err = h * (e1 * f_ + e3 * st.k3 + e4 * st.k4 + e5 * st.k5 + e6 * st.k6 + e7 * st.k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y_(i)), std::abs(st.y1(i)));
      acc += (err(i) / sc) * (err(i) / sc);
    }
    const double en = std::sqrt(acc / static_cast<double>(y_.size()));
    if (!std::isfinite(en)) {
      h *= 0.25;
      continue;
    }
    const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    if (en <= 1.0) {
      last_.s0 = s_;
      last_.h = h;
      last_.y0 = y_;
      last_.y1 = st.y1;
      last_.f0 = f_;
      last_.f1 = st.k7;
      const Vec ydiff = st.y1 - y_;
      const Vec bspl = h * f_ - ydiff;
      last_.rc[0] = y_;
      last_.rc[1] = ydiff;
      last_.rc[2] = bspl;
      last_.rc[3] = ydiff - h * st.k7 - bspl;
      last_.rc[4] = h * (d1 * f_ + d3 * st.k3 + d4 * st.k4 + d5 * st.k5 + d6 * st.k6 + d7 * st.k7);
      s_ += h;
      y_ = st.y1;
      f_ = st.k7;
      h_ = std::min(h * factor, opt_.h_max);
      return last_;
    }
    h *= std::max(factor, 0.2);
  }
}

}  // namespace nullglide
