#pragma once

#include "nullglide/geometry.hpp"
#include "nullglide/ode.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

namespace nullglide {

struct FlowOptions {
  double tol_ode = 0.0;   // 0: use the model tolerance
  bool reproject = true;  // shell re-projection after accepted steps
  double h_max_factor = 0.1;
  int dense_samples = 8;
};

struct TraceWindow {
  double tau_max = std::numeric_limits<double>::infinity();
  double tau_min = -std::numeric_limits<double>::infinity();
  double s_max = std::numeric_limits<double>::infinity();
  int max_events = 100000;
  bool forward = true;
};

enum class StopReason { BoundaryHit, ParameterBound, TemporalBound, EventLimit };

// State layout y = (x, xi, integral of A along the curve).
struct ArcNode {
  double s = 0.0;
  Vec y;
  Vec dy;
  double shell = 0.0;  // |p| / |xi|^2
};

struct Arc {
  std::vector<ArcNode> nodes;
  double max_shell_residual = 0.0;
  int reprojections = 0;
  bool near_glancing = false;
};

struct ArcResult {
  Arc arc;
  std::optional<PhasePoint> exit;
  double exit_s = 0.0;
  double exit_a_integral = 0.0;
  StopReason reason = StopReason::ParameterBound;
};

struct ReflectionEvent {
  int k = 0;
  double s = 0.0;
  Vec xb;
  PhasePoint incoming;
  PhasePoint outgoing;
  BoundaryCovector covector;
  double xi_n = 0.0;
  double tau = 0.0;
  double a_integral = 0.0;  // from the source to this event
};

struct BrokenTrajectory {
  BoundaryCovector source;
  double sgn = -1.0;
  std::vector<Arc> arcs;
  std::vector<ReflectionEvent> events;
  TraceWindow window;
  StopReason reason = StopReason::ParameterBound;
  bool truncated = false;
  bool near_glancing = false;
  double max_shell_residual = 0.0;
  int reprojections = 0;
};

struct GlidingSample {
  double s = 0.0;
  Vec xb;
  Vec xi_b;
  double a_integral = 0.0;
};

struct GlidingRay {
  std::vector<GlidingSample> samples;
  std::vector<ArcNode> nodes;  // integrator nodes in (x', xi', I) for interpolation
  bool forward = true;
  double sgn = -1.0;
  double max_shell_residual = 0.0;

  GlidingSample at(double s) const;
};

struct BoundaryCurveSample {
  double s = 0.0;
  Vec xb;
  Vec v;
};

struct BoundaryCurve {
  std::vector<BoundaryCurveSample> samples;
};

struct LiftChoice {
  Side side = Side::Inward;
  double sgn = -1.0;
  bool enters_interior = false;
  bool causal_future = false;
};

// (x', xi') at the start plus dx/ds and dxi/ds along the forward flow.
struct PhaseVelocity {
  Vec xdot;
  Vec xidot;
};

PhaseVelocity hamiltonian_rhs(const ManifoldModel& model, const PhasePoint& pp);

double forward_sign(Orientation o, bool forward);
std::array<LiftChoice, 4> enumerate_lift_choices(const ManifoldModel& model, const BoundaryCovector& bc);

ArcResult integrate_arc(const ManifoldModel& model, const PhasePoint& start, double sgn, double s0,
                        const TraceWindow& stop, const FlowOptions& opt = {}, double a0 = 0.0);

PhasePoint reflect(const ManifoldModel& model, const PhasePoint& pp);

BrokenTrajectory trace_broken(const ManifoldModel& model, const BoundaryCovector& source,
                              const TraceWindow& window, const FlowOptions& opt = {});

GlidingRay trace_gliding(const ManifoldModel& model, const BoundaryCovector& source, const TraceWindow& window,
                         const FlowOptions& opt = {}, const std::vector<double>& output_grid = {});

BoundaryCurve boundary_null_geodesic(const ManifoldModel& model, const Vec& xb, const Vec& v,
                                     const TraceWindow& window, const FlowOptions& opt = {},
                                     const std::vector<double>& output_grid = {});

// Deviation in (x', xi') between a gliding ray and the boundary geodesic with matching data.
double gliding_geodesic_deviation(const ManifoldModel& model, const BoundaryCovector& source, double length,
                                  const FlowOptions& opt = {}, int grid_points = 400);

struct ConvergenceRow {
  double eps = 0.0;
  int events = 0;
  double distance = 0.0;
  std::vector<double> event_distance;
  std::vector<double> nearest_parameter;
};

struct ConvergenceTable {
  Vec source_xb;
  Vec source_xi;
  Vec transversal;
  std::vector<ConvergenceRow> rows;
};

// Transversal covector pushing a null covector into the hyperbolic side.
Vec hyperbolic_transversal(const ManifoldModel& model, const Vec& xb, const Vec& xi_null);

ConvergenceTable convergence_probe(const ManifoldModel& model, const BoundaryCovector& glancing,
                                   const std::vector<double>& eps, double window_t,
                                   const FlowOptions& opt = {}, const Vec* transversal = nullptr);

// Distance in the auxiliary sphere-bundle metric: chart distance of base points plus
// Euclidean distance of unit-normalized covectors.
double phase_distance(const Vec& xa, const Vec& xia, const Vec& xb, const Vec& xib);

void write_trajectory_csv(std::ostream& os, int traj_id, const BrokenTrajectory& tr, bool header);
void write_event_csv(std::ostream& os, int traj_id, const BrokenTrajectory& tr, bool header);
void write_gliding_csv(std::ostream& os, int traj_id, const GlidingRay& ray, bool header);

}  // namespace nullglide
