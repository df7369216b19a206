#include "cqed/atom_dynamics.hpp"
#include "cqed/field_maps.hpp"

#include <cmath>
#include <string>

namespace cqed {

double measure_heating_per_orbit(const RadialMaps& maps, const HeatingCalibrationSpec& spec,
                                 double orbital_period) {
  SimConfig config = SimConfig::axial_pinned_default();
  config.gravity = false;
  config.substeps = 1;
  config.dt_info = spec.dt;
  config.rng_seed = spec.seed;
  Propagator prop(maps, config);
  const double mass = maps.params().mass;

  const double start_rho = spec.amplitude_over_waist * maps.params().waist;
  const double duration = spec.periods * orbital_period;
  const auto steps = static_cast<long>(std::ceil(duration / spec.dt));
  double total_gain = 0.0;
  for (std::size_t run = 0; run < spec.runs; ++run) {
    Rng rng = make_rng(spec.seed, run, 1);
    AtomState s;
    s.r.y = start_rho;
    s.level = spec.level;
    prop.invalidate();
    const double e0 = prop.total_energy(s, spec.level);
    // Control variate: the kick cross term p.dp/m has zero mean.
    double cross = 0.0;
    for (long k = 0; k < steps; ++k) {
      prop.step(s, rng, spec.dt);
      const Vec3& d = prop.last_kick();
      cross += ((s.p.x - d.x) * d.x + (s.p.y - d.y) * d.y + (s.p.z - d.z) * d.z) / mass;
    }
    total_gain += prop.total_energy(s, spec.level) - e0 - cross;
  }
  const double mean_gain = total_gain / static_cast<double>(spec.runs);
  return mean_gain * orbital_period / (static_cast<double>(steps) * spec.dt);
}

HeatingCalibration calibrate_diffusion(const RadialMaps& maps, const HeatingCalibrationSpec& spec) {
  HeatingCalibration out;
  const double amplitude = spec.amplitude_over_waist * maps.params().waist;
  out.orbital_period = 2.0 * radial_period(maps, spec.level, amplitude).period;
  out.target_per_orbit = spec.target_fraction * maps.depth(spec.level);

  DiffusionModel model = maps.diffusion_model();
  if (model.recoil_scale == 0.0) model.recoil_scale = DiffusionModel::recoil(maps.params()).recoil_scale;
  auto measure = [&](double gain) {
    DiffusionModel m = model;
    m.calibration_gain = gain;
    return measure_heating_per_orbit(maps.with_diffusion(m), spec, out.orbital_period);
  };

  double g0 = model.calibration_gain > 0.0 ? model.calibration_gain : 1.0;
  double h0 = measure(g0);
  if (!(h0 > 0.0)) throw SolverError("heating calibration: no heating at the starting gain");
  double g1 = g0 * out.target_per_orbit / h0;
  double h1 = measure(g1);
  out.iterations = 1;
  while (std::abs(h1 - out.target_per_orbit) > spec.tolerance * out.target_per_orbit) {
    if (out.iterations >= spec.max_iterations || h1 == h0) {
      throw SolverError("heating calibration did not converge after " +
                        std::to_string(out.iterations) + " iterations");
    }
    const double g2 = g1 + (out.target_per_orbit - h1) * (g1 - g0) / (h1 - h0);
    g0 = g1;
    h0 = h1;
    g1 = g2 > 0.0 ? g2 : 0.5 * g1;
    h1 = measure(g1);
    ++out.iterations;
  }
  model.calibration_gain = g1;
  out.model = model;
  out.heating_per_orbit = h1;
  return out;
}

}  // namespace cqed
