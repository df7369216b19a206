#pragma once

// Quasiclassical atom motion in the drive-dependent cavity potential.
// Coordinates: x along the cavity axis, (y, z) transverse with gravity along -z.

#include "cqed/controllers.hpp"
#include "cqed/detection.hpp"
#include "cqed/estimators.hpp"
#include "cqed/field_maps.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace cqed {

enum class SimMode { full3d, axial_pinned };
std::string_view to_string(SimMode mode);
SimMode parse_sim_mode(std::string_view name);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct AtomState {
  double t = 0.0;
  Vec3 r;  // m
  Vec3 p;  // kg m/s
  DriveLevel level = DriveLevel::exlo;

  double rho() const;
  double theta() const;                            // atan2(-z, y)
  double rho_dot(double mass) const;               // m/s, 0 on axis
  double angular_momentum() const;                 // y pz - z py
  double kinetic_energy(double mass) const;
};

/// Per-trajectory generator seeded from (master, index, stream).
Rng make_rng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t stream = 0);

struct InitialConditions {
  double drop_height = 0.35e-3;           // m, free fall before entering
  double mot_temperature = 10e-6;         // K, isotropic thermal spread
  double start_height_over_waist = 3.0;   // z at t = 0
  double entry_half_width_over_waist = 0.9;  // y uniform in +-this
};

struct SimConfig {
  SimMode mode = SimMode::full3d;
  double dt_info = 1e-6;
  int substeps = 3000;  // dt_info / dt_dynamics
  double t_max = 10e-3;
  std::uint64_t rng_seed = 1;
  InitialConditions initial;
  bool gravity = true;                // applied in full3d only
  double axial_diffusion_factor = 1.0;
  double friction = 0.0;              // 1/s, p -= friction p dt
  double escape_radius_over_waist = 2.5;
  int escape_energy_steps = 10;

  double dt_dynamics() const { return dt_info / substeps; }
  void validate() const;

  static SimConfig full3d_default();
  static SimConfig axial_pinned_default();
};

AtomState sample_initial(const SimConfig& config, const SystemParams& params, Rng& rng);

/// Leapfrog integrator with cached force and post-kick diffusion impulses.
class Propagator {
 public:
  Propagator(const RadialMaps& maps, const SimConfig& config);

  void step(AtomState& state, Rng& rng);
  void step(AtomState& state, Rng& rng, double dt);

  Vec3 force(const Vec3& r, DriveLevel level) const;
  double potential(const Vec3& r, DriveLevel level) const;
  double diffusion(const Vec3& r, DriveLevel level) const;
  double total_energy(const AtomState& state, DriveLevel level) const;
  /// Drops the cached force (call after editing a state by hand).
  void invalidate() { cached_.reset(); }
  /// Diffusion impulse applied by the last step.
  const Vec3& last_kick() const { return last_kick_; }

 private:
  struct Cache {
    Vec3 r;
    DriveLevel level;
    Vec3 force;
    double diffusion;
  };
  void evaluate(const Vec3& r, DriveLevel level, Vec3& force, double& diffusion) const;
  void lookup(DriveLevel level, double rho, double& force, double& pop) const;

  const RadialMaps* maps_;
  SimConfig config_;
  double mass_;
  double wavenumber_;
  double waist2_;
  double rho_max2_;
  DiffusionModel diffusion_;
  double inv_spacing_ = 0.0;
  std::size_t last_index_ = 0;
  std::array<const LevelProfile*, 4> profiles_{};
  std::array<double, 4> edge_diffusion_{};
  std::optional<Cache> cached_;
  Vec3 last_kick_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class Termination { escaped, t_max, never_triggered };
std::string_view to_string(Termination cause);
Termination parse_termination(std::string_view name);

struct TrajectorySample {
  double t = 0.0;
  double rho = 0.0;
  double rho_dot = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double angular_momentum = 0.0;
  DriveLevel level = DriveLevel::exlo;
  double t_noiseless = 0.0;
  double t_noisy = 0.0;
  double t_filtered = 0.0;
  double rho_est = 0.0;
  double rho_dot_est = 0.0;
  double control_rate = 0.0;  // the signal the controller saw
  double energy_ref = 0.0;    // KE + U at the reference level
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  std::vector<ControlEvent> events;
  Termination termination = Termination::t_max;
  std::optional<double> trigger_time;
  double end_time = 0.0;
  double trigger_threshold = 0.0;

  std::optional<double> dwell() const;
};

struct MeasurementConfig {
  NoiseModel noise;
  EstimatorConfig estimator;
  DriveLevel energy_reference = DriveLevel::hi;
};

/// Deepest level the controller can apply after the trigger; the energy
/// escape test is evaluated against it.
DriveLevel deepest_reachable_level(const RadialMaps& maps, const ControllerConfig& controller);

/// Integrates one drop. The RNG streams for dynamics and detection are
/// derived from (config.rng_seed, index).
TrajectoryRecord run_trajectory(const SimConfig& config, const RadialMaps& maps,
                                const ControllerConfig& controller,
                                const MeasurementConfig& measurement, std::uint64_t index = 0);

/// Same loop from a given initial state; the controller starts triggered when
/// `start_triggered` is set (level = controller.trap_on_level).
TrajectoryRecord run_from_state(const SimConfig& config, const RadialMaps& maps,
                                const ControllerConfig& controller,
                                const MeasurementConfig& measurement, AtomState initial,
                                Rng& dynamics_rng, Rng& detection_rng, bool start_triggered);

struct PeriodPoint {
  double amplitude = 0.0;  // outer turning point, m
  double inner = 0.0;      // inner turning point, m
  double period = 0.0;     // rho period, s
};

/// Period of rho between its turning points at angular momentum L (kg m^2/s),
/// with outer turning point `rho_outer`. Throws std::domain_error when the
/// energy is at or above the trap edge.
PeriodPoint radial_period(const RadialMaps& maps, DriveLevel level, double rho_outer,
                          double angular_momentum = 0.0);

std::vector<PeriodPoint> period_amplitude_curve(const RadialMaps& maps, DriveLevel level,
                                                const std::vector<double>& amplitudes,
                                                double angular_momentum = 0.0);

/// Small-oscillation rho period at L = 0, pi sqrt(m / U''(0)).
double harmonic_rho_period(const RadialMaps& maps, DriveLevel level);

}  // namespace cqed
