#pragma once

// Flat JSON run configuration for the command-line front end. Unknown keys are rejected and every
// value is validated before any computation starts. A run manifest is a RunConfig serialised with
// its effective values plus "artifact_version", and loads back as a config.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "levy_rotor/engine.hpp"

namespace levy_rotor {

enum class OutputFormat { csv, json };

struct RunConfig {
  double alpha = 1.5;
  double kappa = 1.0;
  std::int64_t p = 1;
  std::int64_t q = 1;
  std::int64_t n_trajectories = 1000;
  std::int64_t horizon = 10000;
  int points_per_decade = 20;
  std::uint64_t master_seed = 20240917;
  EngineKind engine = EngineKind::closed_form_kernel;
  KernelModel kernel_model;
  FloorPolicy floor_policy = FloorPolicy::floor_allow_zero;
  SampleSemantics sample_semantics = SampleSemantics::held_after_collapse;
  std::optional<double> fit_t_min;  // default sqrt(horizon)
  double fit_tolerance = 0.15;
  int bootstrap_resamples = 200;
  OutputFormat format = OutputFormat::csv;
  std::string out_dir = "out";
  bool svg = false;
  std::int64_t master_intervals = 1000;
  std::int64_t initial_momentum = 0;
  std::vector<double> alpha_values;
  std::vector<double> kappa_values;
  std::vector<double> beta_values;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// Throws ConfigError on any invalid value.
  void validate() const;

  EnsembleConfig ensemble(int threads = 1) const;
  double effective_fit_t_min() const;
};

}  // namespace levy_rotor
