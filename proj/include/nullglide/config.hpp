#pragma once

#include "nullglide/dnsynth.hpp"
#include "nullglide/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nullglide {

inline constexpr int kConfigSchema = 1;

// Message carries "<source>:<line>:<column>: ..." when a position is known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct TraceSettings {
  int count = 8;          // randomized hyperbolic sources drawn from U
  int bounces = 10;
  double glide_length = 6.0;
  int lens_k = 1;
};

struct ReconSettings {
  double match_tol = 1e-6;
  double separation = 1e-3;
  int min_directions = 0;
  int patches = 10;
  double residual_threshold = 1e-3;
  double cone_threshold = 1e-3;
  double oneform_threshold = 1e-2;
  double metric_threshold = 1e-4;
};

struct GaugeSettings {
  double c = 0.3;
  double psi_amplitude = 0.5;
};

struct RunConfig {
  ScenarioSpec scenario;
  Region U;
  Region V;
  ProbeDesign probes;
  TraceWindow window;
  TraceSettings trace;
  ReconSettings recon;
  GaugeSettings gauge;
  std::string out = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
};

std::string scenario_yaml(const ScenarioSpec& spec);
ScenarioSpec parse_scenario_yaml(const std::string& text, const std::string& source = "scenario");

std::string run_config_yaml(const RunConfig& cfg);
RunConfig parse_run_config(const std::string& text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

// NULLGLIDE_TOL_ODE, NULLGLIDE_TOL_G, NULLGLIDE_TOL_SHELL, NULLGLIDE_TOL_EVENT, NULLGLIDE_TOL_SYMP,
// NULLGLIDE_H_FD, NULLGLIDE_H_LENS, NULLGLIDE_MATCH_TOL.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();
void apply_env_overrides(RunConfig& cfg, const EnvLookup& env);

// Positive tolerances, n in {3, 4}, region dimensions, U and V disjoint.
void validate(const RunConfig& cfg);

// Default flat cylinder run used by the CLI examples and the acceptance suite.
RunConfig default_run_config();

}  // namespace nullglide
