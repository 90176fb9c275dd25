#pragma once

#include "nullglide/flow.hpp"
#include "nullglide/region.hpp"

#include <complex>
#include <string>
#include <vector>

namespace nullglide {

enum class ProbeResponse { Empty, Discrete, Curve };
const char* to_string(ProbeResponse r);
ProbeResponse parse_response(const std::string& s);

// Quadrature of A(dx/ds) over the arcs of a sampled trajectory, cubic Hermite between kept nodes
// and 5-point Gauss-Legendre per interval. stride = 2 keeps every second node.
double line_integral_A(const ManifoldModel& model, const BrokenTrajectory& tr, int upto_event = -1,
                       int stride = 1);
double line_integral_A(const ManifoldModel& model, const GlidingRay& ray, int stride = 1);

struct TransferTruth {
  int k = 0;
  double sign = 1.0;
  double a_integral = 0.0;
  double xi_n0 = 0.0;
  double xi_nk = 0.0;
  double tau = 0.0;
};

std::complex<double> transfer_coefficient(const ManifoldModel& model, const BoundaryCovector& source,
                                          const ReflectionEvent& ev, TransferTruth* truth = nullptr);
// Closed-form re-evaluation of |Q| from phase-space data only.
double transfer_modulus(const ManifoldModel& model, const Vec& x0, double xi_n0, const Vec& xk, double xi_nk);

struct MeasurementRecord {
  BoundaryCovector source;
  BoundaryCovector hit;
  std::complex<double> Q;
  TransferTruth truth;
};

struct Probe {
  Vec base;
  Vec covec;
  std::string kind;  // grid | glancing | eps | closure | target (truth side only)
};

// A V-side point with a covector basis; probes are found by tracing backward into U.
struct TargetSpec {
  Vec point;
  std::vector<Vec> basis;
};

struct ProbeDesign {
  std::vector<int> base_counts;  // grid over U, one count per boundary axis
  double inset = 0.1;
  int fan = 8;
  bool glancing = true;
  std::vector<double> glancing_angles;  // n = 4 only; empty means the default set
  std::vector<double> eps = {4e-3, 2e-3, 1e-3};
  bool closure = true;
  std::vector<TargetSpec> hit_targets;     // prior on U, metric wanted on V
  std::vector<TargetSpec> source_targets;  // prior on V, metric wanted on U
};

std::vector<double> default_glancing_angles(int n);
// Covectors {z_a} and {z_a + z_b, a < b}.
std::vector<Vec> polarization_set(const std::vector<Vec>& basis);

std::vector<Probe> make_probe_plan(const ManifoldModel& model, const Region& U, const Region& V,
                                   const ProbeDesign& design, const TraceWindow& window);

struct HitRecord {
  BoundaryCovector hit;
  std::complex<double> Q;
  TransferTruth truth;
};

struct ProbeResult {
  Probe probe;
  BoundaryCovector source;
  ProbeResponse response = ProbeResponse::Empty;
  std::vector<HitRecord> hits;  // sorted by arrival tau
  std::string note;             // failure detail (tangency) if any
};

struct Measurements {
  int n = 3;
  Region U;
  Region V;
  TraceWindow window;
  std::vector<ProbeResult> probes;  // sorted canonically by source

  std::vector<MeasurementRecord> records() const;
};

struct ClassifyDetail {
  ProbeResponse response = ProbeResponse::Empty;
  std::vector<int> level_hits;
  std::vector<double> level_distance;  // coarser levels against the finest one
};

ClassifyDetail probe_classify_detail(const ManifoldModel& model, const Region& U, const Region& V, const Vec& xb,
                                     const Vec& xi, const TraceWindow& window, const std::vector<double>& eps,
                                     const FlowOptions& opt = {});
ProbeResponse probe_classify(const ManifoldModel& model, const Region& U, const Region& V, const Vec& xb,
                             const Vec& xi, const TraceWindow& window, const std::vector<double>& eps,
                             const FlowOptions& opt = {});

Measurements synthesize(const ManifoldModel& model, const Region& U, const Region& V,
                        const std::vector<Probe>& plan, const TraceWindow& window, const ProbeDesign& design,
                        int jobs = 1, const FlowOptions& opt = {});

// Blinded data: sources, responses, hits with Q. No reflection counts, signs or orientations.
struct BlindedHit {
  Vec x;
  Vec xi;
  std::complex<double> Q;
};

struct BlindedProbe {
  Vec x;
  Vec xi;
  ProbeResponse response = ProbeResponse::Empty;
  std::vector<BlindedHit> hits;  // lexicographic in (x, xi)
};

struct BlindedView {
  int n = 3;
  Region U;
  Region V;
  std::vector<BlindedProbe> probes;
};

BlindedView blind(const Measurements& m);
std::string blinded_json(const BlindedView& v);
BlindedView parse_blinded_json(const std::string& text);
std::string truth_json(const Measurements& m);

}  // namespace nullglide
