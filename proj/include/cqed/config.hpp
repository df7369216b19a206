#pragma once

// Versioned run configuration (JSON). Readers reject unknown keys; absent
// keys keep the defaults.

#include "cqed/experiment.hpp"
#include "cqed/serialization.hpp"

#include <json.hpp>

#include <string>

namespace cqed {

inline constexpr int kSchemaVersion = 1;

struct DiffusionCalibrationConfig {
  double dimensional_projection = 1.0;
  HeatingCalibrationSpec spec;
};

struct NoiseConfig {
  bool enabled = true;
  double target_sensitivity = 20e-9;  // m/sqrt(Hz)
  NoiseLaw law = NoiseLaw::signal_sqrt;
  double floor = 0.0;
  DriveLevel level = DriveLevel::hi;  // level whose branch sets the calibration
};

struct RunConfig {
  SystemParams system;
  HilbertSpace hilbert;
  GridSpec grid;
  InversionBranch branch = InversionBranch::outer;
  DiffusionCalibrationConfig diffusion;
  NoiseConfig noise;
  EstimatorConfig estimator;
  SimConfig sim;
  ControllerConfig controller;
  CampaignSpec campaign;  // sim/controller/measurement fields are filled from above

  /// Named starting points: full3d (default), full3d_reduced, axial_pinned.
  static RunConfig preset(const std::string& name);
  /// Campaign spec with the sim, controller and estimator sections applied.
  CampaignSpec campaign_spec(const NoiseModel& calibrated_noise) const;
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);
/// Throws std::invalid_argument on unknown keys, bad enum names or a schema
/// version mismatch.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace cqed
