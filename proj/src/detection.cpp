#include "cqed/detection.hpp"

#include <cmath>
#include <string>

namespace cqed {

std::string_view to_string(NoiseLaw law) {
  return law == NoiseLaw::signal_sqrt ? "signal_sqrt" : "linear";
}

NoiseLaw parse_noise_law(std::string_view name) {
  if (name == "signal_sqrt") return NoiseLaw::signal_sqrt;
  if (name == "linear") return NoiseLaw::linear;
  throw std::invalid_argument("unknown noise law '" + std::string(name) + "'");
}

double NoiseModel::sigma(double t_noiseless) const {
  const double level = std::max(t_noiseless + floor, 0.0);
  return law == NoiseLaw::signal_sqrt ? noise_gain * std::sqrt(level) : noise_gain * level;
}

double add_shot_noise(double t_noiseless, const NoiseModel& model, Rng& rng) {
  if (model.noise_gain == 0.0) return t_noiseless;
  std::normal_distribution<double> normal(0.0, 1.0);
  return t_noiseless + model.sigma(t_noiseless) * normal(rng);
}

namespace {

struct SteepPoint {
  double rho = 0.0;
  double slope = 0.0;
  double transmission = 0.0;
};

SteepPoint steepest_point(const RadialMaps& maps, DriveLevel level) {
  const auto& p = maps.profile(level);
  const auto& grid = maps.grid();
  SteepPoint best;
  const std::size_t b = std::max<std::size_t>(p.branch_begin, 1);
  const std::size_t e = std::min(p.branch_end, grid.size() - 2);
  for (std::size_t i = b; i <= e; ++i) {
    const double slope =
        std::abs(p.transmission[i + 1] - p.transmission[i - 1]) / (grid[i + 1] - grid[i - 1]);
    if (slope > best.slope) best = {grid[i], slope, p.transmission[i]};
  }
  return best;
}

}  // namespace

double position_sensitivity(const RadialMaps& maps, DriveLevel level, const NoiseModel& model,
                            double dt_info) {
  const auto steep = steepest_point(maps, level);
  if (!(steep.slope > 0.0)) throw MapError("transmission slope on the branch is degenerate");
  return model.sigma(steep.transmission) * std::sqrt(2.0 * dt_info) / steep.slope;
}

NoiseCalibration calibrate_noise(const RadialMaps& maps, DriveLevel level,
                                 double target_sensitivity, double dt_info, NoiseModel base) {
  if (target_sensitivity < 0.0) throw std::invalid_argument("target sensitivity must be >= 0");
  const auto steep = steepest_point(maps, level);
  if (!(steep.slope > 0.0)) throw MapError("transmission slope on the branch is degenerate");
  NoiseCalibration cal;
  cal.steepest_rho = steep.rho;
  cal.steepest_slope = steep.slope;
  cal.model = base;
  cal.model.noise_gain = 1.0;
  const double unit_sigma = cal.model.sigma(steep.transmission);
  if (!(unit_sigma > 0.0)) throw MapError("noise law gives zero variance at the steepest point");
  cal.model.noise_gain = target_sensitivity * steep.slope / (std::sqrt(2.0 * dt_info) * unit_sigma);
  cal.sensitivity = position_sensitivity(maps, level, cal.model, dt_info);
  return cal;
}

double resolvable_amplitude(double sensitivity, double cycle_time) {
  return sensitivity * std::sqrt(1.0 / (kTwoPi * cycle_time));
}

}  // namespace cqed
