#pragma once

// Shot-noise model for the sampled transmission record.

#include "cqed/field_maps.hpp"

#include <random>
#include <string_view>

namespace cqed {

using Rng = std::mt19937_64;

enum class NoiseLaw {
  signal_sqrt,  // std = gain * sqrt(T + floor)
  linear,       // std = gain * (T + floor)
};

std::string_view to_string(NoiseLaw law);
NoiseLaw parse_noise_law(std::string_view name);

struct NoiseModel {
  double noise_gain = 0.0;
  double floor = 0.0;
  NoiseLaw law = NoiseLaw::signal_sqrt;

  double sigma(double t_noiseless) const;
};

/// T + n with n ~ Normal(0, sigma(T)^2).
double add_shot_noise(double t_noiseless, const NoiseModel& model, Rng& rng);

struct NoiseCalibration {
  NoiseModel model;
  double steepest_rho = 0.0;       // m
  double steepest_slope = 0.0;     // |dT/drho|, 1/m
  double sensitivity = 0.0;        // achieved, m/sqrt(Hz)
};

/// Position noise density implied by `model` at the steepest point of the
/// branch: sigma_T * sqrt(2 dt) / |dT/drho| (one-sided, m/sqrt(Hz)).
double position_sensitivity(const RadialMaps& maps, DriveLevel level, const NoiseModel& model,
                            double dt_info);

/// Chooses noise_gain so position_sensitivity equals `target_sensitivity`.
/// Throws MapError when the branch slope is degenerate.
NoiseCalibration calibrate_noise(const RadialMaps& maps, DriveLevel level,
                                 double target_sensitivity, double dt_info,
                                 NoiseModel base = {});

/// Smallest rho amplitude resolvable over one motional cycle of length tau:
/// sensitivity * sqrt(1 / (2 pi tau)).
double resolvable_amplitude(double sensitivity, double cycle_time);

}  // namespace cqed
