#pragma once

// Radial lookup tables derived from steady states of the Jaynes-Cummings
// master equation: potential, force, transmission, excited population and the
// momentum-diffusion coefficient, per drive level, on a uniform rho grid.

#include "cqed/qjc_core.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

/// Malformed or inconsistent table data (non-monotone branch, bad file).
class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  std::size_t points = 2048;
  double rho_max_over_waist = 3.0;
};

/// Which monotone piece of T(rho) the inverse map uses. T peaks at rho_peak;
/// `outer` is [rho_peak, edge] (T decreasing), `inner` is [0, rho_peak].
enum class InversionBranch { outer, inner };

std::string_view to_string(InversionBranch branch);
InversionBranch parse_inversion_branch(std::string_view name);

/// D(rho) = calibration_gain * dimensional_projection * (hbar k)^2 gamma * P_e(rho)
struct DiffusionModel {
  double recoil_scale = 0.0;
  double dimensional_projection = 1.0;
  double calibration_gain = 1.0;

  static DiffusionModel recoil(const SystemParams& params);
  double coefficient(double excited_pop) const {
    return calibration_gain * dimensional_projection * recoil_scale * excited_pop;
  }
};

struct LevelProfile {
  DriveLevel level = DriveLevel::hi;
  std::vector<double> potential;     // J, zero at the grid edge
  std::vector<double> force;         // N, radial component
  std::vector<double> transmission;  // |<a>|^2
  std::vector<double> excited_pop;
  double depth = 0.0;                // U0 = -min U
  double fitted_waist = 0.0;         // w in -U0 exp(-rho^2/w^2)
  double fit_relative_rms = 0.0;
  std::size_t peak_index = 0;        // argmax T
  std::size_t branch_begin = 0;      // inverse-map branch, inclusive
  std::size_t branch_end = 0;        // inclusive
};

/// Result of a Gaussian least-squares fit U ~ -A exp(-rho^2/w^2).
struct GaussianFit {
  double amplitude = 0.0;
  double waist = 0.0;
  double relative_rms = 0.0;
};
GaussianFit fit_gaussian_potential(const std::vector<double>& grid,
                                   const std::vector<double>& potential, double rho_limit);

/// Values of one level at one radius, sharing a single grid lookup.
struct RadialSample {
  double potential = 0.0;
  double force = 0.0;
  double excited_pop = 0.0;
  double transmission = 0.0;
};

class RadialMaps {
 public:
  RadialMaps(SystemParams params, HilbertSpace space, std::vector<double> grid,
             std::vector<LevelProfile> profiles, DiffusionModel diffusion,
             InversionBranch branch);

  const SystemParams& params() const { return params_; }
  const HilbertSpace& space() const { return space_; }
  const std::vector<double>& grid() const { return grid_; }
  double rho_max() const { return grid_.back(); }
  double spacing() const { return spacing_; }
  InversionBranch branch() const { return branch_; }
  const DiffusionModel& diffusion_model() const { return diffusion_; }
  RadialMaps with_diffusion(const DiffusionModel& model) const;

  bool has_level(DriveLevel level) const;
  /// Throws std::out_of_range when the level was not built.
  const LevelProfile& profile(DriveLevel level) const;
  std::vector<DriveLevel> levels() const;

  double potential(DriveLevel level, double rho) const;
  double force(DriveLevel level, double rho) const;
  double diffusion(DriveLevel level, double rho) const;
  double excited_pop(DriveLevel level, double rho) const;
  double transmission(DriveLevel level, double rho) const;
  /// Steady-state transmission at the instantaneous coupling g(x, rho).
  double transmission(DriveLevel level, double x, double rho) const;
  double invert_transmission(DriveLevel level, double t_value) const;
  RadialSample sample(DriveLevel level, double rho) const;

  double depth(DriveLevel level) const { return profile(level).depth; }
  double fitted_waist(DriveLevel level) const { return profile(level).fitted_waist; }
  /// Transmission of the driven cavity with no atom, eps^2/(kappa^2 + delta_cp^2).
  double empty_cavity_transmission(DriveLevel level) const;
  /// Radius at x = 0 with the same |g| as (x, rho); +inf at a node.
  double effective_radius(double x, double rho) const;

 private:
  const LevelProfile* find(DriveLevel level) const;
  double interpolate(const std::vector<double>& values, double rho) const;

  SystemParams params_;
  HilbertSpace space_;
  std::vector<double> grid_;
  double spacing_ = 0.0;
  std::array<std::optional<LevelProfile>, 4> profiles_;
  DiffusionModel diffusion_;
  InversionBranch branch_ = InversionBranch::outer;
};

struct MapBuildOptions {
  GridSpec grid;
  std::vector<DriveLevel> levels{kAllDriveLevels.begin(), kAllDriveLevels.end()};
  InversionBranch branch = InversionBranch::outer;
  unsigned jobs = 1;
};

/// Throws MapError if T(rho) is not monotone on the requested branch and
/// SolverError on a failed steady-state solve.
RadialMaps build_maps(const SystemParams& params, const HilbertSpace& space,
                      const MapBuildOptions& options,
                      const DiffusionModel& diffusion = {});

/// Fills the derived fields of a profile (depth, fit, branch) from its raw columns.
void finalize_profile(LevelProfile& profile, const std::vector<double>& grid,
                      double waist, InversionBranch branch);

// Table persistence. The CSV body has the columns
// level,rho_m,U_J,F_N,T,D,pop_e preceded by '#' header lines that carry the
// format version and the JSON metadata needed to rebuild the maps.
void write_maps_csv(const RadialMaps& maps, const std::string& path,
                    const std::string& extra_metadata_json = "{}");
RadialMaps read_maps_csv(const std::string& path);
/// The extra metadata object stored by write_maps_csv, as a JSON string.
std::string read_maps_metadata(const std::string& path);

// Heating calibration (implemented on top of the trajectory integrator).
struct HeatingCalibrationSpec {
  DriveLevel level = DriveLevel::hi;
  double amplitude_over_waist = 0.5;  // reference orbit: L = 0 oscillation
  double target_fraction = 0.02;      // energy gain per orbit / U0
  std::size_t runs = 200;
  double periods = 5.0;               // duration of each run, in orbital periods
  double dt = 1e-6 / 30.0;
  std::uint64_t seed = 20050706;
  double tolerance = 0.02;            // relative, on the secant iteration
  int max_iterations = 8;
};

struct HeatingCalibration {
  DiffusionModel model;
  double orbital_period = 0.0;       // tau_r of the reference orbit, s
  double heating_per_orbit = 0.0;    // J, measured at the final gain
  double target_per_orbit = 0.0;     // J
  int iterations = 0;
};

/// Mean energy gain per orbital period on the reference orbit for the given
/// diffusion model (ensemble average, deterministic in the seed).
double measure_heating_per_orbit(const RadialMaps& maps, const HeatingCalibrationSpec& spec,
                                 double orbital_period);

/// Secant search on calibration_gain. Throws SolverError on non-convergence.
HeatingCalibration calibrate_diffusion(const RadialMaps& maps,
                                       const HeatingCalibrationSpec& spec = {});

}  // namespace cqed
