#pragma once

#include "nullglide/dnsynth.hpp"
#include "nullglide/io.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nullglide {

struct PhaseCovector {
  Vec x;
  Vec xi;
};

// Chart distance of base points plus distance of covectors relative to their size; periodic
// axes compared modulo their period.
double covector_distance(const Vec& xa, const Vec& xia, const Vec& xb, const Vec& xib, const Vec& periods);

struct WeakLensGroup {
  std::vector<int> probes;         // indices into BlindedView::probes
  std::vector<PhaseCovector> b_u;  // sources
  std::vector<PhaseCovector> b_v;  // distinct hits
};

struct WeakLensTable {
  std::vector<WeakLensGroup> groups;
  std::vector<int> probe_group;  // -1 for probes without hits
  std::vector<std::pair<int, int>> ambiguous;
  double match_tol = 1e-6;
};

// Sources sharing a hit (up to match_tol) lie on one broken trajectory; groups are the
// connected components. Pairs of groups closer than separation are reported as ambiguous.
WeakLensTable build_weak_lens(const BlindedView& blinded, double match_tol = 1e-6, double separation = 1e-3);

struct RecoverableOptions {
  int min_directions = 0;  // 0: 2 for n = 3, N(N+1)/2 - 1 for n > 3
};

struct RecoverablePoint {
  Vec x;
  std::vector<Vec> directions;  // Curve-classified glancing covectors
  int sampled = 0;              // glancing-looking probes (Curve) plus Empty probes at the point
};

struct RecoverableSets {
  std::vector<RecoverablePoint> u_points;  // recoverable points of U
  std::vector<RecoverablePoint> v_points;
  std::vector<PhaseCovector> u_directions;
  std::vector<PhaseCovector> v_directions;
  std::vector<Vec> undersampled;
};

RecoverableSets detect_recoverable(const BlindedView& blinded, const RecoverableOptions& opt = {});

struct ConformalClassEstimate {
  Vec x;
  Mat q;  // quadric on covectors, |det| = 1, signature (-,+,...,+)
  double residual = 0.0;
  double second_singular = 0.0;
};

// timelike: a covector known to lie inside the cone (e.g. a Discrete probe); fixes the sign for n = 3.
ConformalClassEstimate fit_conformal_class(const Vec& x, const std::vector<Vec>& directions,
                                           const Vec* timelike = nullptr);
// First-order angular distance of the cone of q_true from the cone of q_est, maximized over
// sampled null directions of q_true.
double cone_angle_deviation(const Mat& q_est, const Mat& q_true, int samples = 64);
// Vector dual to a covector under the quadric, normalized in the chart.
Vec raise_direction(const Mat& q, const Vec& xi);

struct LensPatch {
  Vec x;
  Vec xi;               // glancing covector the patch is built around
  double radius = 0.6;  // chart radius of W
  double angle = 0.25;  // angular radius of W in unit covector directions
};

struct LocalLens {
  std::vector<std::pair<PhaseCovector, PhaseCovector>> steps;  // (b, L'(b))
  std::vector<std::vector<PhaseCovector>> chains;              // ordered B_U restricted to W
  std::vector<int> chain_groups;
  Vec time_covector;
  bool patch_too_large = false;
};

// Orders each B_U inside the patch by the time function t = w.(x - x0) with w timelike for q.
LocalLens recover_lens_orientation(const BlindedView& blinded, const WeakLensTable& table,
                                   const ConformalClassEstimate& cls, const LensPatch& patch, bool flip = false);

// Truth side: +1 when every step is the forward lens map, -1 when every step is its inverse,
// 0 for a mixture or a mismatch.
int lens_branch(const ManifoldModel& model, const LocalLens& lens, double tol = 1e-6);

struct ConformalRelationRecord {
  Vec x0;
  Vec xk;
  double d1 = 0.0;  // (n-2) phi(x0) - n phi(xk) for the representative h, model 1
  double d2 = 0.0;
  double discrepancy = 0.0;
};

struct ConformalRelationReport {
  std::vector<ConformalRelationRecord> records;
  double max_discrepancy = 0.0;
  double spread = 0.0;
  bool flagged = false;
};

using MetricFn = std::function<Mat(const Vec&)>;

ConformalRelationReport check_conformal_relation(const BlindedView& m1, const BlindedView& m2, const MetricFn& h,
                                                 double flag_tol = 1e-5);

struct ConstancyReport {
  int samples = 0;
  double max_violation = 0.0;
  bool flagged = false;
};

// Samples boundary null geodesics from U into V and compares (n-2) phi(z) with n phi(x).
ConstancyReport validate_local_constancy(const ManifoldModel& model, const ScalarField& phi, const Region& U,
                                         const Region& V, const std::vector<int>& counts,
                                         const TraceWindow& window, double flag_tol = 1e-3);

struct OneFormOptions {
  double match_tol = 1e-6;
  double max_angle = 0.2;  // eps probes are taken within this distance of the glancing direction
  int stride = 1;          // use every stride-th point of each chain
  int offset = 0;
  int min_points = 3;
};

struct OneFormDirection {
  Vec x;
  Vec glancing;
  Vec u;  // chart direction of the gliding ray
  double value = 0.0;  // A(u) after extrapolation
  std::vector<double> eps;
  std::vector<double> slopes;
  std::vector<int> points;
  double extrapolation_residual = 0.0;
  bool ok = false;
  std::string note;
};

struct OneFormEstimate {
  Vec x;
  Vec A;  // tangential components in the boundary chart
  std::vector<OneFormDirection> directions;
  bool ok = false;
  std::string note;
};

OneFormDirection recover_one_form_direction(const BlindedView& blinded, const WeakLensTable& table,
                                            const ConformalClassEstimate& cls, const Vec& glancing,
                                            const LensPatch& patch, const OneFormOptions& opt = {});
OneFormEstimate recover_one_form(const BlindedView& blinded, const WeakLensTable& table,
                                 const ConformalClassEstimate& cls, const std::vector<Vec>& glancing,
                                 const LensPatch& patch_template, const OneFormOptions& opt = {});

enum class PriorSide { U, V };

struct MetricPrior {
  MetricFn gbar;
  std::function<Orientation(const Vec&, const Vec&)> orientation;
};

struct MetricRecovery {
  Vec point;
  Mat gbar;
  Mat C;
  double det_factor = 0.0;  // |det C|^{-1/n} (prior on U) or |det C|^{1/(n-2)} (prior on V)
  std::vector<double> S;
  Orientation orientation = Orientation::None;
};

MetricRecovery recover_metric_with_prior(const BlindedView& blinded, const MetricPrior& prior, PriorSide side,
                                         const Vec& y, const std::vector<Vec>& basis, double match_tol = 1e-6);

enum class ReachMode { Gliding, Broken };

struct ReachableSets {
  std::vector<Vec> u_grid;
  std::vector<Vec> v_grid;
  std::vector<bool> u_in;
  std::vector<bool> v_in;
  int u_count() const;
  int v_count() const;
};

ReachableSets reachable_sets(const ManifoldModel& model, const Region& U, const Region& V, ReachMode mode,
                             const TraceWindow& window, const std::vector<int>& counts, int directions = 16,
                             double inset = 0.0, const FlowOptions& opt = {});

}  // namespace nullglide
