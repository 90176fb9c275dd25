#pragma once

#include "nullglide/config.hpp"
#include "nullglide/io.hpp"
#include "nullglide/recon.hpp"

#include <filesystem>
#include <optional>

namespace nullglide {

struct LensPatchResult {
  Vec x;
  Vec glancing;
  LocalLens lens;
  LocalLens flipped;
};

struct MetricTargetResult {
  TargetSpec target;
  PriorSide side = PriorSide::U;
  std::optional<MetricRecovery> recovery;
  std::string note;
};

struct ReconstructionResult {
  int n = 3;
  WeakLensTable table;
  RecoverableSets sets;
  std::vector<ConformalClassEstimate> classes;  // one per Ũ point, then one per Ṽ point
  std::vector<std::string> class_notes;
  std::vector<LensPatchResult> patches;
  std::vector<OneFormEstimate> oneforms;  // one per Ũ point
  std::vector<MetricTargetResult> metrics;
  double max_residual = 0.0;
};

// Blinded data only. Priors are the a priori boundary metric (and orientation) on the side named.
ReconstructionResult reconstruct(const BlindedView& blinded, const ReconSettings& settings,
                                 const std::vector<TargetSpec>& hit_targets,
                                 const std::vector<TargetSpec>& source_targets, const MetricPrior* prior_u,
                                 const MetricPrior* prior_v, int jobs = 1);

Json reconstruction_json(const ReconstructionResult& r);

// Prior from a scenario, refusing points outside the given region.
MetricPrior region_prior(const Scenario& s, const Region& side);

// The truth sidecar can only be reached through this handle; reconstruct() never sees it.
class TruthSidecar {
 public:
  static std::optional<TruthSidecar> open(const std::filesystem::path& p);
  const Json& data() const { return data_; }

 private:
  explicit TruthSidecar(Json j) : data_(std::move(j)) {}
  Json data_;
};

struct TruthDeltas {
  Json json;
  double max_cone = 0.0;
  double max_oneform = 0.0;
  double max_metric = 0.0;
  int mixed_patches = 0;
  int inconsistent_groups = 0;
  bool breach = false;
};

TruthDeltas truth_deltas(const ReconstructionResult& r, const Scenario& truth, const TruthSidecar& sidecar,
                         const BlindedView& blinded, const ReconSettings& settings);

// Tangential components of the model's one-form at a boundary point.
Vec boundary_one_form(const ManifoldModel& model, const Vec& xb);

}  // namespace nullglide
