#pragma once

// Driven, damped Jaynes-Cummings system on a truncated Fock space.
//
// Basis ordering is |atom> (x) |n>, index = atom * (n_fock + 1) + n with
// atom 0 = ground and atom 1 = excited. All rates and detunings are angular
// (rad/s); Hamiltonians are H/hbar.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cqed {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kHbar = 1.054571817e-34;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kStandardGravity = 9.80665;

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Thrown when a steady-state solve is singular or fails its residual check.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DriveLevel { exlo = 0, lo = 1, hi = 2, exhi = 3 };
inline constexpr std::array<DriveLevel, 4> kAllDriveLevels = {
    DriveLevel::exlo, DriveLevel::lo, DriveLevel::hi, DriveLevel::exhi};

std::string_view to_string(DriveLevel level);
/// Throws std::invalid_argument for names other than exlo/lo/hi/exhi.
DriveLevel parse_drive_level(std::string_view name);

/// Empty-cavity resonant photon numbers of the named drive levels.
struct DriveLevels {
  double exlo = 0.05;
  double lo = 0.15;
  double hi = 0.3;
  double exhi = 0.6;

  double photons(DriveLevel level) const;
};

struct SystemParams {
  double g0 = kTwoPi * 110e6;
  double kappa = kTwoPi * 14.2e6;
  double gamma = kTwoPi * 2.6e6;
  // omega_c - omega_p = (omega_c - omega_a) - (omega_p - omega_a) = -47 + 125 MHz
  double delta_cp = kTwoPi * 78e6;
  // omega_a - omega_p = +125 MHz
  double delta_ap = kTwoPi * 125e6;
  double wavelength = 852.35e-9;
  double waist = 14e-6;
  double mass = 2.20694657e-25;  // 133Cs
  DriveLevels drive_levels;

  double wavenumber() const { return kTwoPi / wavelength; }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct HilbertSpace {
  int n_fock = 6;

  int dim() const { return 2 * (n_fock + 1); }
};

struct DensityOperator {
  ComplexMatrix matrix;

  std::complex<double> trace() const { return matrix.trace(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
};

struct SteadyStateObservables {
  std::complex<double> mean_field;
  double photon_number = 0.0;
  double excited_pop = 0.0;
  double dipole_corr = 0.0;
  double transmission = 0.0;
};

/// Field and atomic operators of the truncated space.
struct JcOperators {
  ComplexMatrix a;      // cavity annihilation
  ComplexMatrix sigma;  // atomic lowering |g><e|
  ComplexMatrix identity;

  explicit JcOperators(const HilbertSpace& space);
};

/// g(x, rho) = g0 cos(2 pi x / lambda) exp(-rho^2 / w0^2).
double coupling(const SystemParams& params, double x, double rho);
/// d g / d rho at (x, rho).
double coupling_radial_derivative(const SystemParams& params, double x, double rho);

/// epsilon = kappa sqrt(n): the empty cavity driven on resonance holds n photons.
double drive_amplitude(const SystemParams& params, DriveLevel level);
double drive_amplitude_for_photons(const SystemParams& params, double photons);

ComplexMatrix build_hamiltonian(const SystemParams& params, const HilbertSpace& space,
                                double g, double eps);

/// Column-major vectorized Liouvillian, vec(L(rho)) = liouvillian * vec(rho).
ComplexMatrix build_liouvillian(const SystemParams& params, const HilbertSpace& space,
                                double g, double eps);

/// Reusable steady-state solver. The Liouvillian is affine in (g, eps), so the
/// three pieces are assembled once and combined per solve.
class SteadyStateSolver {
 public:
  SteadyStateSolver(const SystemParams& params, const HilbertSpace& space);

  DensityOperator solve(double g, double eps) const;
  SteadyStateObservables observables(const DensityOperator& rho) const;
  SteadyStateObservables solve_observables(double g, double eps) const {
    return observables(solve(g, eps));
  }
  /// ||L(rho)|| relative to ||L|| (Frobenius norms).
  double relative_residual(const DensityOperator& rho, double g, double eps) const;

  const HilbertSpace& space() const { return space_; }
  const SystemParams& params() const { return params_; }

 private:
  ComplexMatrix liouvillian(double g, double eps) const;

  SystemParams params_;
  HilbertSpace space_;
  JcOperators ops_;
  ComplexMatrix l_fixed_;
  ComplexMatrix l_coupling_;
  ComplexMatrix l_drive_;
};

DensityOperator steady_state(const SystemParams& params, const HilbertSpace& space,
                             double g, double eps);

/// Steady-state dipole force -hbar (dg/drho) <a^dag sigma + sigma^dag a> along rho.
double force_radial(const SystemParams& params, const HilbertSpace& space,
                    DriveLevel level, double x, double rho);

/// Relative change of <a^dag a> when n_fock grows by one.
double truncation_change(const SystemParams& params, const HilbertSpace& space,
                         double g, double eps);

}  // namespace cqed
