#include "cqed/qjc_core.hpp"

#include <cmath>
#include <sstream>

namespace cqed {

namespace {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// -i [H, .] in column-major vectorized form.
ComplexMatrix commutator_superop(const ComplexMatrix& h, const ComplexMatrix& id) {
  const std::complex<double> minus_i(0.0, -1.0);
  return minus_i * (kron(id, h) - kron(h.transpose(), id));
}

// 2 c . c^dag - c^dag c . - . c^dag c
ComplexMatrix dissipator_superop(const ComplexMatrix& c, const ComplexMatrix& id) {
  const ComplexMatrix cdc = c.adjoint() * c;
  return 2.0 * kron(c.conjugate(), c) - kron(id, cdc) - kron(cdc.transpose(), id);
}

}  // namespace

std::string_view to_string(DriveLevel level) {
  switch (level) {
    case DriveLevel::exlo: return "exlo";
    case DriveLevel::lo: return "lo";
    case DriveLevel::hi: return "hi";
    case DriveLevel::exhi: return "exhi";
  }
  return "?";
}

DriveLevel parse_drive_level(std::string_view name) {
  for (auto level : kAllDriveLevels) {
    if (to_string(level) == name) return level;
  }
  throw std::invalid_argument("unknown drive level '" + std::string(name) + "'");
}

double DriveLevels::photons(DriveLevel level) const {
  switch (level) {
    case DriveLevel::exlo: return exlo;
    case DriveLevel::lo: return lo;
    case DriveLevel::hi: return hi;
    case DriveLevel::exhi: return exhi;
  }
  throw std::invalid_argument("unknown drive level");
}

void SystemParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid system parameters: ") + what);
  };
  require(g0 > 0.0, "g0 must be positive");
  require(kappa > 0.0, "kappa must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(wavelength > 0.0, "wavelength must be positive");
  require(waist > 0.0, "waist must be positive");
  require(mass > 0.0, "mass must be positive");
  for (auto level : kAllDriveLevels) {
    require(drive_levels.photons(level) >= 0.0, "drive photon numbers must be >= 0");
  }
  require(std::isfinite(delta_cp) && std::isfinite(delta_ap), "detunings must be finite");
}

double DensityOperator::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
  const ComplexMatrix herm = 0.5 * (matrix + matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(herm, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

JcOperators::JcOperators(const HilbertSpace& space) {
  const int nf = space.n_fock + 1;
  const int dim = space.dim();
  ComplexMatrix a_field = ComplexMatrix::Zero(nf, nf);
  for (int n = 1; n < nf; ++n) a_field(n - 1, n) = std::sqrt(static_cast<double>(n));
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  a = kron(ComplexMatrix::Identity(2, 2), a_field);
  sigma = kron(lower, ComplexMatrix::Identity(nf, nf));
  identity = ComplexMatrix::Identity(dim, dim);
}

double coupling(const SystemParams& params, double x, double rho) {
  return params.g0 * std::cos(params.wavenumber() * x) *
         std::exp(-rho * rho / (params.waist * params.waist));
}

double coupling_radial_derivative(const SystemParams& params, double x, double rho) {
  return -2.0 * rho / (params.waist * params.waist) * coupling(params, x, rho);
}

double drive_amplitude_for_photons(const SystemParams& params, double photons) {
  if (photons < 0.0) throw std::invalid_argument("photon number must be >= 0");
  return params.kappa * std::sqrt(photons);
}

double drive_amplitude(const SystemParams& params, DriveLevel level) {
  return drive_amplitude_for_photons(params, params.drive_levels.photons(level));
}

ComplexMatrix build_hamiltonian(const SystemParams& params, const HilbertSpace& space,
                                double g, double eps) {
  if (space.n_fock < 1) throw std::invalid_argument("photon truncation n_fock must be >= 1");
  const JcOperators ops(space);
  const ComplexMatrix& a = ops.a;
  const ComplexMatrix& s = ops.sigma;
  return params.delta_cp * a.adjoint() * a + params.delta_ap * s.adjoint() * s +
         g * (a * s.adjoint() + a.adjoint() * s) + eps * (a + a.adjoint());
}

ComplexMatrix build_liouvillian(const SystemParams& params, const HilbertSpace& space,
                                double g, double eps) {
  const JcOperators ops(space);
  const ComplexMatrix h = build_hamiltonian(params, space, g, eps);
  return commutator_superop(h, ops.identity) +
         params.gamma * dissipator_superop(ops.sigma, ops.identity) +
         params.kappa * dissipator_superop(ops.a, ops.identity);
}

SteadyStateSolver::SteadyStateSolver(const SystemParams& params, const HilbertSpace& space)
    : params_(params), space_(space), ops_(space) {
  if (space.n_fock < 1) throw std::invalid_argument("photon truncation n_fock must be >= 1");
  const ComplexMatrix& a = ops_.a;
  const ComplexMatrix& s = ops_.sigma;
  const ComplexMatrix& id = ops_.identity;
  const ComplexMatrix h_fixed =
      params.delta_cp * a.adjoint() * a + params.delta_ap * s.adjoint() * s;
  l_fixed_ = commutator_superop(h_fixed, id) + params.gamma * dissipator_superop(s, id) +
             params.kappa * dissipator_superop(a, id);
  l_coupling_ = commutator_superop(a * s.adjoint() + a.adjoint() * s, id);
  l_drive_ = commutator_superop(a + a.adjoint(), id);
}

ComplexMatrix SteadyStateSolver::liouvillian(double g, double eps) const {
  return l_fixed_ + g * l_coupling_ + eps * l_drive_;
}

DensityOperator SteadyStateSolver::solve(double g, double eps) const {
  const int dim = space_.dim();
  const ComplexMatrix l = liouvillian(g, eps);
  const double scale = l.norm();
  ComplexMatrix system = l / scale;
  // Replace the first equation by the trace constraint.
  system.row(0).setZero();
  for (int i = 0; i < dim; ++i) system(0, i * dim + i) = 1.0;
  ComplexVector rhs = ComplexVector::Zero(dim * dim);
  rhs(0) = 1.0;

  Eigen::PartialPivLU<ComplexMatrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "steady-state system is singular (rcond estimate " << rcond << ") at g=" << g
        << " eps=" << eps;
    throw SolverError(msg.str());
  }
  const ComplexVector vec = lu.solve(rhs);

  DensityOperator rho;
  rho.matrix = Eigen::Map<const ComplexMatrix>(vec.data(), dim, dim);
  rho.matrix = 0.5 * (rho.matrix + rho.matrix.adjoint()).eval();
  rho.matrix /= rho.matrix.trace().real();

  const double residual = (l * Eigen::Map<const ComplexVector>(rho.matrix.data(), dim * dim)).norm() / scale;
  if (!(residual < 1e-10)) {
    std::ostringstream msg;
    msg << "steady-state residual " << residual << " exceeds tolerance (rcond " << rcond << ")";
    throw SolverError(msg.str());
  }
  return rho;
}

double SteadyStateSolver::relative_residual(const DensityOperator& rho, double g,
                                            double eps) const {
  const int dim = space_.dim();
  const ComplexMatrix l = liouvillian(g, eps);
  const ComplexVector vec = Eigen::Map<const ComplexVector>(rho.matrix.data(), dim * dim);
  return (l * vec).norm() / l.norm();
}

SteadyStateObservables SteadyStateSolver::observables(const DensityOperator& rho) const {
  const ComplexMatrix& m = rho.matrix;
  const ComplexMatrix& a = ops_.a;
  const ComplexMatrix& s = ops_.sigma;
  SteadyStateObservables obs;
  obs.mean_field = (m * a).trace();
  obs.photon_number = (m * a.adjoint() * a).trace().real();
  obs.excited_pop = (m * s.adjoint() * s).trace().real();
  obs.dipole_corr = (m * (a.adjoint() * s + s.adjoint() * a)).trace().real();
  obs.transmission = std::norm(obs.mean_field);
  return obs;
}

DensityOperator steady_state(const SystemParams& params, const HilbertSpace& space, double g,
                             double eps) {
  return SteadyStateSolver(params, space).solve(g, eps);
}

double force_radial(const SystemParams& params, const HilbertSpace& space, DriveLevel level,
                    double x, double rho) {
  const double dg = coupling_radial_derivative(params, x, rho);
  if (dg == 0.0) return 0.0;
  const SteadyStateSolver solver(params, space);
  const auto obs =
      solver.solve_observables(coupling(params, x, rho), drive_amplitude(params, level));
  return -kHbar * dg * obs.dipole_corr;
}

double truncation_change(const SystemParams& params, const HilbertSpace& space, double g,
                         double eps) {
  const HilbertSpace bigger{space.n_fock + 1};
  const double n0 = SteadyStateSolver(params, space).solve_observables(g, eps).photon_number;
  const double n1 = SteadyStateSolver(params, bigger).solve_observables(g, eps).photon_number;
  return std::abs(n1 - n0) / std::max(std::abs(n1), 1e-300);
}

}  // namespace cqed
