#include "cqed/atom_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cqed {

std::string_view to_string(SimMode mode) {
  return mode == SimMode::full3d ? "full3d" : "axial_pinned";
}

SimMode parse_sim_mode(std::string_view name) {
  if (name == "full3d") return SimMode::full3d;
  if (name == "axial_pinned") return SimMode::axial_pinned;
  throw std::invalid_argument("unknown sim mode '" + std::string(name) + "'");
}

std::string_view to_string(Termination cause) {
  switch (cause) {
    case Termination::escaped: return "escaped";
    case Termination::t_max: return "t_max";
    case Termination::never_triggered: return "never_triggered";
  }
  return "?";
}

Termination parse_termination(std::string_view name) {
  for (Termination c : {Termination::escaped, Termination::t_max, Termination::never_triggered}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown termination '" + std::string(name) + "'");
}

double AtomState::rho() const { return std::hypot(r.y, r.z); }
double AtomState::theta() const { return std::atan2(-r.z, r.y); }

double AtomState::rho_dot(double mass) const {
  const double rho_now = rho();
  if (rho_now == 0.0) return 0.0;
  return (r.y * p.y + r.z * p.z) / (mass * rho_now);
}

double AtomState::angular_momentum() const { return r.y * p.z - r.z * p.y; }

double AtomState::kinetic_energy(double mass) const {
  return (p.x * p.x + p.y * p.y + p.z * p.z) / (2.0 * mass);
}

Rng make_rng(std::uint64_t master_seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

void SimConfig::validate() const {
  if (!(dt_info > 0.0)) throw std::invalid_argument("dt_info must be > 0");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (initial.drop_height < 0.0 || initial.mot_temperature < 0.0) {
    throw std::invalid_argument("drop height and MOT temperature must be >= 0");
  }
  if (!(initial.start_height_over_waist > 0.0) || initial.entry_half_width_over_waist < 0.0) {
    throw std::invalid_argument("bad entry geometry");
  }
  if (axial_diffusion_factor < 0.0 || friction < 0.0) {
    throw std::invalid_argument("axial diffusion factor and friction must be >= 0");
  }
  if (!(escape_radius_over_waist > 0.0) || escape_energy_steps < 1) {
    throw std::invalid_argument("bad escape criterion");
  }
}

SimConfig SimConfig::full3d_default() { return SimConfig{}; }

SimConfig SimConfig::axial_pinned_default() {
  SimConfig c;
  c.mode = SimMode::axial_pinned;
  c.substeps = 30;
  c.t_max = 60e-3;
  return c;
}

AtomState sample_initial(const SimConfig& config, const SystemParams& params, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& ic = config.initial;
  AtomState s;
  s.r.z = ic.start_height_over_waist * params.waist;
  s.r.y = (2.0 * unit(rng) - 1.0) * ic.entry_half_width_over_waist * params.waist;
  const double x = unit(rng) * params.wavelength;
  const double sigma_v = std::sqrt(kBoltzmann * ic.mot_temperature / params.mass);
  const double vx = sigma_v * normal(rng);
  const double vy = sigma_v * normal(rng);
  const double vz = sigma_v * normal(rng) - std::sqrt(2.0 * kStandardGravity * ic.drop_height);
  if (config.mode == SimMode::full3d) {
    s.r.x = x;
    s.p.x = params.mass * vx;
  }
  s.p.y = params.mass * vy;
  s.p.z = params.mass * vz;
  return s;
}

Propagator::Propagator(const RadialMaps& maps, const SimConfig& config)
    : maps_(&maps),
      config_(config),
      mass_(maps.params().mass),
      wavenumber_(maps.params().wavenumber()),
      waist2_(maps.params().waist * maps.params().waist),
      rho_max2_(maps.rho_max() * maps.rho_max()),
      diffusion_(maps.diffusion_model()) {
  config_.validate();
  for (DriveLevel level : maps.levels()) {
    edge_diffusion_[static_cast<int>(level)] = maps.diffusion(level, maps.rho_max());
    profiles_[static_cast<int>(level)] = &maps.profile(level);
  }
  inv_spacing_ = 1.0 / maps.spacing();
  last_index_ = maps.grid().size() - 1;
}

void Propagator::lookup(DriveLevel level, double rho, double& force, double& pop) const {
  const LevelProfile* p = profiles_[static_cast<int>(level)];
  if (!p) throw std::out_of_range("drive level not present in the maps");
  const double pos = rho * inv_spacing_;
  if (!(pos < static_cast<double>(last_index_))) {
    force = p->force[last_index_];
    pop = p->excited_pop[last_index_];
    return;
  }
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  force = p->force[i] + f * (p->force[i + 1] - p->force[i]);
  pop = p->excited_pop[i] + f * (p->excited_pop[i + 1] - p->excited_pop[i]);
}

void Propagator::evaluate(const Vec3& r, DriveLevel level, Vec3& f, double& d) const {
  const double rho2 = r.y * r.y + r.z * r.z;
  const double rho = std::sqrt(rho2);
  f = {};
  double fr = 0.0;
  double pop = 0.0;
  if (config_.mode == SimMode::axial_pinned) {
    lookup(level, rho, fr, pop);
    if (rho > 0.0) {
      f.y = fr * r.y / rho;
      f.z = fr * r.z / rho;
    }
    d = diffusion_.coefficient(pop);
    return;
  }
  const double phase = wavenumber_ * r.x;
  const double c = std::cos(phase);
  const double rho_e2 = rho2 - waist2_ * std::log(std::abs(c));
  if (!(rho_e2 < rho_max2_)) {
    d = edge_diffusion_[static_cast<int>(level)];
  } else {
    const double rho_e = std::sqrt(rho_e2);
    lookup(level, rho_e, fr, pop);
    d = diffusion_.coefficient(pop);
    if (rho_e > 0.0) {
      const double radial = fr / rho_e;
      f.y = radial * r.y;
      f.z = radial * r.z;
      f.x = radial * 0.5 * waist2_ * wavenumber_ * std::sin(phase) / c;
    }
  }
  if (config_.gravity) f.z -= mass_ * kStandardGravity;
}

Vec3 Propagator::force(const Vec3& r, DriveLevel level) const {
  Vec3 f;
  double d = 0.0;
  evaluate(r, level, f, d);
  return f;
}

double Propagator::diffusion(const Vec3& r, DriveLevel level) const {
  Vec3 f;
  double d = 0.0;
  evaluate(r, level, f, d);
  return d;
}

double Propagator::potential(const Vec3& r, DriveLevel level) const {
  const double rho = std::hypot(r.y, r.z);
  if (config_.mode == SimMode::axial_pinned) return maps_->potential(level, rho);
  const double rho_e = maps_->effective_radius(r.x, rho);
  if (!std::isfinite(rho_e)) return 0.0;
  return maps_->potential(level, rho_e);
}

double Propagator::total_energy(const AtomState& s, DriveLevel level) const {
  return s.kinetic_energy(mass_) + potential(s.r, level);
}

void Propagator::step(AtomState& s, Rng& rng) { step(s, rng, config_.dt_dynamics()); }

void Propagator::step(AtomState& s, Rng& rng, double dt) {
  if (!cached_ || cached_->level != s.level || cached_->r.x != s.r.x || cached_->r.y != s.r.y ||
      cached_->r.z != s.r.z) {
    Cache c{s.r, s.level, {}, 0.0};
    evaluate(s.r, s.level, c.force, c.diffusion);
    cached_ = c;
  }
  const bool pinned = config_.mode == SimMode::axial_pinned;
  const double half = 0.5 * dt;
  Vec3& p = s.p;
  const Vec3& f0 = cached_->force;
  p.x += half * f0.x;
  p.y += half * f0.y;
  p.z += half * f0.z;
  if (!pinned) s.r.x += p.x / mass_ * dt;
  s.r.y += p.y / mass_ * dt;
  s.r.z += p.z / mass_ * dt;

  Cache c{s.r, s.level, {}, 0.0};
  evaluate(s.r, s.level, c.force, c.diffusion);
  cached_ = c;
  p.x += half * c.force.x;
  p.y += half * c.force.y;
  p.z += half * c.force.z;

  last_kick_ = {};
  if (c.diffusion > 0.0) {
    auto& normal = normal_;
    const double kick = std::sqrt(2.0 * c.diffusion * dt);
    last_kick_.y = kick * normal(rng);
    last_kick_.z = kick * normal(rng);
    if (!pinned && config_.axial_diffusion_factor > 0.0) {
      last_kick_.x = kick * std::sqrt(config_.axial_diffusion_factor) * normal(rng);
    }
    p.x += last_kick_.x;
    p.y += last_kick_.y;
    p.z += last_kick_.z;
  }
  if (config_.friction > 0.0) {
    const double keep = 1.0 - config_.friction * dt;
    p.x *= keep;
    p.y *= keep;
    p.z *= keep;
  }
  if (pinned) p.x = 0.0;
  s.t += dt;
}

std::optional<double> TrajectoryRecord::dwell() const {
  if (!trigger_time) return std::nullopt;
  return end_time - *trigger_time;
}

DriveLevel deepest_reachable_level(const RadialMaps& maps, const ControllerConfig& controller) {
  DriveLevel best = controller.trap_on_level;
  if (controller.policy != Policy::constant) {
    for (DriveLevel l : {controller.fb_high, controller.fb_low}) {
      if (maps.depth(l) > maps.depth(best)) best = l;
    }
  }
  return best;
}

TrajectoryRecord run_trajectory(const SimConfig& config, const RadialMaps& maps,
                                const ControllerConfig& controller,
                                const MeasurementConfig& measurement, std::uint64_t index) {
  Rng init_rng = make_rng(config.rng_seed, index, 0);
  Rng dynamics_rng = make_rng(config.rng_seed, index, 1);
  Rng detection_rng = make_rng(config.rng_seed, index, 2);
  AtomState s = sample_initial(config, maps.params(), init_rng);
  s.level = controller.probe_level;
  return run_from_state(config, maps, controller, measurement, s, dynamics_rng, detection_rng,
                        false);
}

TrajectoryRecord run_from_state(const SimConfig& config, const RadialMaps& maps,
                                const ControllerConfig& controller,
                                const MeasurementConfig& measurement, AtomState s,
                                Rng& dynamics_rng, Rng& detection_rng, bool start_triggered) {
  config.validate();
  if (std::abs(measurement.estimator.dt_info - config.dt_info) > 1e-12 * config.dt_info ||
      std::abs(controller.dt_info - config.dt_info) > 1e-12 * config.dt_info) {
    throw std::invalid_argument("estimator, controller and simulation dt_info differ");
  }
  const double mass = maps.params().mass;
  const double waist = maps.params().waist;
  const double escape_rho = config.escape_radius_over_waist * waist;
  const double entry_rho = config.initial.start_height_over_waist * waist;

  Propagator prop(maps, config);
  EstimatorChain chain(maps, measurement.estimator);
  TrajectoryRecord rec;
  rec.trigger_threshold = trigger_threshold(maps, controller);
  FeedbackController ctrl(controller, start_triggered ? -std::numeric_limits<double>::infinity()
                                                      : rec.trigger_threshold);
  s.level = controller.probe_level;

  const auto n_info = static_cast<long>(std::floor(config.t_max / config.dt_info + 1e-9));
  rec.samples.reserve(static_cast<std::size_t>(std::min<long>(n_info + 1, 200000)));
  int positive_energy_run = 0;
  const DriveLevel binding_level = deepest_reachable_level(maps, controller);
  const double t0 = s.t;

  for (long k = 0;; ++k) {
    // sample at t_k
    s.t = t0 + static_cast<double>(k) * config.dt_info;
    TrajectorySample smp;
    smp.t = s.t;
    smp.rho = s.rho();
    smp.rho_dot = s.rho_dot(mass);
    smp.x = s.r.x;
    smp.y = s.r.y;
    smp.z = s.r.z;
    smp.angular_momentum = s.angular_momentum();
    smp.t_noiseless = config.mode == SimMode::axial_pinned
                          ? maps.transmission(s.level, smp.rho)
                          : maps.transmission(s.level, s.r.x, smp.rho);
    smp.t_noisy = add_shot_noise(smp.t_noiseless, measurement.noise, detection_rng);
    const auto est = chain.step(smp.t_noisy, s.level, smp.rho_dot);
    smp.t_filtered = est.filtered_t;
    smp.rho_est = est.rho_est;
    smp.rho_dot_est = est.rho_dot_est;
    smp.energy_ref = prop.total_energy(s, measurement.energy_reference);

    ControllerInput in;
    in.t = s.t;
    in.filtered_t = est.filtered_t;
    if (controller.rate_source == RateSource::true_box) {
      in.rate = est.true_rate_box;
      in.rate_valid = true;
    } else {
      in.rate = est.rho_dot_est;
      in.rate_valid = est.rate_valid;
    }
    smp.control_rate = in.rate;
    smp.level = s.level;
    rec.samples.push_back(smp);

    if (auto ev = ctrl.step(in)) {
      if (ev->cause == EventCause::trigger) {
        rec.trigger_time = s.t;
        if (start_triggered) ev.reset();
      }
      if (ev) rec.events.push_back(*ev);
      s.level = ctrl.level();
    }

    // termination checks on the sampled state
    if (rec.trigger_time) {
      const double e = prop.total_energy(s, binding_level);
      positive_energy_run = e > 0.0 ? positive_energy_run + 1 : 0;
      if ((smp.rho > escape_rho && smp.rho_dot > 0.0) ||
          positive_energy_run >= config.escape_energy_steps) {
        rec.termination = Termination::escaped;
        break;
      }
    } else if (smp.rho > entry_rho && smp.rho_dot > 0.0 && k > 0) {
      rec.termination = Termination::never_triggered;
      break;
    }
    if (k >= n_info) {
      rec.termination = rec.trigger_time ? Termination::t_max : Termination::never_triggered;
      break;
    }

    for (int j = 0; j < config.substeps; ++j) prop.step(s, dynamics_rng);
  }
  rec.end_time = s.t;
  return rec;
}

namespace {

double effective_potential(const RadialMaps& maps, DriveLevel level, double rho, double l2m) {
  // l2m = L^2 / (2 m)
  return maps.potential(level, rho) + (rho > 0.0 ? l2m / (rho * rho) : 0.0);
}

}  // namespace

PeriodPoint radial_period(const RadialMaps& maps, DriveLevel level, double rho_outer,
                          double angular_momentum) {
  const double mass = maps.params().mass;
  const double l2m = angular_momentum * angular_momentum / (2.0 * mass);
  if (!(rho_outer > 0.0) || rho_outer >= maps.rho_max()) {
    throw std::domain_error("amplitude outside the tabulated range");
  }
  const double energy = effective_potential(maps, level, rho_outer, l2m);
  if (energy >= 0.0) throw std::domain_error("orbit energy at or above the trap edge");

  double inner = 0.0;
  if (l2m > 0.0) {
    // V_eff minimum on the grid, then bisection for the inner turning point
    const auto& grid = maps.grid();
    double v_min = std::numeric_limits<double>::infinity();
    double rho_min = grid[1];
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double v = effective_potential(maps, level, grid[i], l2m);
      if (v < v_min) {
        v_min = v;
        rho_min = grid[i];
      }
    }
    if (rho_outer <= rho_min) throw std::domain_error("outer turning point inside V_eff minimum");
    double lo = grid[1] * 1e-6;
    double hi = rho_min;
    if (effective_potential(maps, level, lo, l2m) < energy) {
      throw std::domain_error("no inner turning point");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (effective_potential(maps, level, mid, l2m) > energy ? lo : hi) = mid;
    }
    inner = 0.5 * (lo + hi);
  }

  // rho = inner + span (1 - cos phi) / 2 removes the turning-point singularities
  const double span = rho_outer - inner;
  constexpr int kNodes = 8192;
  const double dphi = kPi / kNodes;
  double sum = 0.0;
  for (int i = 0; i < kNodes; ++i) {
    const double phi = (i + 0.5) * dphi;
    const double rho = inner + 0.5 * span * (1.0 - std::cos(phi));
    const double ke = energy - effective_potential(maps, level, rho, l2m);
    if (ke <= 0.0) continue;
    const double v = std::sqrt(2.0 * ke / mass);
    sum += 0.5 * span * std::sin(phi) / v;
  }
  return {rho_outer, inner, 2.0 * sum * dphi};
}

std::vector<PeriodPoint> period_amplitude_curve(const RadialMaps& maps, DriveLevel level,
                                                const std::vector<double>& amplitudes,
                                                double angular_momentum) {
  std::vector<PeriodPoint> out;
  out.reserve(amplitudes.size());
  for (double a : amplitudes) out.push_back(radial_period(maps, level, a, angular_momentum));
  return out;
}

double harmonic_rho_period(const RadialMaps& maps, DriveLevel level) {
  const auto& u = maps.profile(level).potential;
  const double h = maps.spacing();
  // U is even in rho: U''(0) from the first two grid points
  const double curvature = 2.0 * (u[1] - u[0]) / (h * h);
  if (!(curvature > 0.0)) throw std::domain_error("level does not trap at the axis");
  return kPi * std::sqrt(maps.params().mass / curvature);
}

}  // namespace cqed
