#pragma once

#include "nullglide/flow.hpp"

#include <iosfwd>
#include <vector>

namespace nullglide {

struct LensSample {
  BoundaryCovector source;
  BoundaryCovector target;
  int k = 1;
  double flight = 0.0;
  double arrival_tau = 0.0;
};

FlowOptions lens_flow_options();

LensSample lens_map(const ManifoldModel& model, const BoundaryCovector& source, int k,
                    const FlowOptions& opt = lens_flow_options());
// Backward trace: the source whose k-th forward event projects to target.
LensSample lens_inverse(const ManifoldModel& model, const BoundaryCovector& target, int k,
                        const FlowOptions& opt = lens_flow_options());

// Central differences in (x', xi'), steps h_lens * chart scale and h_lens * |xi'|.
MatX lens_differential(const ManifoldModel& model, const BoundaryCovector& source, int k, double h_lens = 0.0,
                       const FlowOptions& opt = lens_flow_options());
MatX canonical_symplectic(int dim);
double symplectic_residual(const MatX& d);

// Directional lens data on a grid over (x', direction angles). Covector directions are
// parametrized by angles psi through unit_direction; targets are arbitrary positive multiples.
struct DirectionalLensPatch {
  int m = 2;                                 // boundary dimension N
  std::vector<std::vector<double>> axes;     // N base axes, then N-1 angle axes
  std::vector<Vec> target_base;              // per node, row-major over axes
  std::vector<Vec> target_dir;
  int k = 1;

  std::size_t node_count() const;
  std::vector<int> index(std::size_t flat) const;
  std::size_t flat(const std::vector<int>& idx) const;
};

Vec unit_direction(const Vec& psi);
Mat unit_direction_jacobian(const Vec& psi);

DirectionalLensPatch sample_directional_patch(const ManifoldModel& model, const Vec& x0, const Vec& psi0,
                                              double half_width, int count, int k, bool unit_targets);

struct ScaledLens {
  std::vector<double> mu;
  std::vector<Vec> target_covec;
  std::vector<double> node_residual;
  double residual_before = 0.0;
  double residual_after = 0.0;
  int iterations = 0;
};

ScaledLens recover_scaling(const DirectionalLensPatch& patch, double tikhonov = 1e-10);

void write_lens_csv(std::ostream& os, const std::vector<LensSample>& samples,
                    const std::vector<double>& residuals, bool header);

}  // namespace nullglide
