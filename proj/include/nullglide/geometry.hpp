#pragma once

#include "nullglide/model.hpp"

#include <vector>

namespace nullglide {

enum class CovectorClass { Elliptic, Glancing, Hyperbolic };
enum class Orientation { Future, Past, None };
enum class Side { Inward, Outward };

const char* to_string(CovectorClass c);
const char* to_string(Orientation o);

struct BoundaryCovector {
  Vec base;
  Vec covec;
  CovectorClass cls = CovectorClass::Elliptic;
  Orientation orientation = Orientation::None;
};

struct PhasePoint {
  Vec x;
  Vec xi;
};

struct MetricEval {
  Mat g;
  Mat g_inv;
  MatDerivs dg;
  // christoffel[k](i, j) = Gamma^k_ij
  MatDerivs christoffel;
};

struct BoundaryMetric {
  Mat g;
  Mat g_inv;
  MatDerivs dg;
  double det = 0.0;
};

void check_domain(const ManifoldModel& model, const Vec& x);
MetricEval metric_eval(const ManifoldModel& model, const Vec& x);
Mat inverse_metric(const ManifoldModel& model, const Vec& x);
// d_l g^{-1} = -g^{-1} (d_l g) g^{-1}
MatDerivs inverse_derivatives(const Mat& g_inv, const MatDerivs& dg, int n);

BoundaryMetric boundary_metric(const ManifoldModel& model, const Vec& xb);

// p(x, xi) = -g^{jk} xi_j xi_k
double principal_symbol(const ManifoldModel& model, const PhasePoint& pp);
double shell_residual(const ManifoldModel& model, const PhasePoint& pp);

Orientation orientation_of(const ManifoldModel& model, const Vec& xb, const Vec& xi_b);
BoundaryCovector classify_covector(const ManifoldModel& model, const Vec& xb, const Vec& xi_b);

// Inward unit normal vector N = g^{-1} d phi_b / |d phi_b|_g at an interior chart point.
Vec inward_normal(const ManifoldModel& model, const Vec& x);
// Signed normal component xi(N).
double normal_component(const ManifoldModel& model, const Vec& x, const Vec& xi);
// Magnitude sqrt(-gbar^{-1}(xi', xi')) of the lift's normal component.
double lift_normal_magnitude(const ManifoldModel& model, const Vec& xb, const Vec& xi_b);

PhasePoint lift_to_null(const ManifoldModel& model, const BoundaryCovector& bc, Side side);
// Covector with tangential part xi_b and normal component xi_n at boundary point xb.
Vec assemble_covector(const ManifoldModel& model, const Vec& xb, const Vec& xi_b, double xi_n);
BoundaryCovector tangential_project(const ManifoldModel& model, const PhasePoint& pp,
                                    const Vec* hint = nullptr);

struct ConvexitySample {
  double second_fundamental_form = 0.0;
  double hp2_phi = 0.0;
  double relative_mismatch = 0.0;
};

ConvexitySample null_convexity(const ManifoldModel& model, const Vec& xb, const Vec& v);
// H_p^2 phi_b at a covector, coordinate formula (independent of the Hessian route).
double hp2_bdefun(const ManifoldModel& model, const Vec& x, const Vec& xi);
double hp_bdefun(const ManifoldModel& model, const Vec& x, const Vec& xi);

// gbar-orthonormal covector frame at xb (row 0 timelike), built by Gram-Schmidt in chart order.
Mat boundary_covector_frame(const Mat& gbar_inv);
// Null boundary covectors sampled over the light cone at xb: for N = 2 the two null lines
// (+-), for N = 3 the circle parametrized by the given angles.
std::vector<Vec> null_boundary_covectors(const ManifoldModel& model, const Vec& xb,
                                         const std::vector<double>& angles);
std::vector<Vec> null_boundary_vectors(const ManifoldModel& model, const Vec& xb,
                                       const std::vector<double>& angles);

struct AdmissibilityPoint {
  Vec xb;
  bool dtau_timelike = false;
  bool boundary_lorentzian = false;
  double min_second_fundamental_form = 0.0;
  bool convex = false;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityPoint> points;
  double min_second_fundamental_form = 0.0;
  bool pass = false;
};

AdmissibilityReport check_admissibility(const ManifoldModel& model, const std::vector<Vec>& grid,
                                        int directions = 16);

class SemiGeodesicChart {
 public:
  SemiGeodesicChart(const ManifoldModel& model, const Vec& xb0, double radius, int steps = 256);
  // Interior chart point of the unit-speed normal geodesic from xb at distance s.
  Vec map(const Vec& xb, double s) const;
  // Pulled-back metric in (x', x^n) coordinates.
  Mat pulled_back_metric(const Vec& xb, double s) const;
  // d Psi / d(x', x^n), columns in chart order.
  Mat chart_jacobian(const Vec& xb, double s) const;
  double radius() const { return radius_; }
  double max_block_residual() const { return residual_; }

 private:
  std::pair<Vec, Vec> shoot(const Vec& xb, double s) const;
  const ManifoldModel* model_;
  Vec xb0_;
  double radius_;
  int steps_;
  double residual_ = 0.0;
};

SemiGeodesicChart semi_geodesic_chart(const ManifoldModel& model, const Vec& xb, double radius);

}  // namespace nullglide
