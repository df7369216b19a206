#include "cqed/atom_dynamics.hpp"
#include "small_maps.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cqed;
using cqed::testing::small_maps;

namespace {

RadialMaps frictionless() {
  DiffusionModel d = small_maps().diffusion_model();
  d.calibration_gain = 0.0;
  return small_maps().with_diffusion(d);
}

SimConfig pinned(double dt, int substeps) {
  SimConfig c = SimConfig::axial_pinned_default();
  c.dt_info = dt;
  c.substeps = substeps;
  c.gravity = false;
  return c;
}

// Rho period of an L = 0 orbit released at rest from y = amplitude.
double simulated_rho_period(const RadialMaps& maps, double amplitude, double span) {
  const SimConfig cfg = pinned(1e-6, 100);
  Propagator prop(maps, cfg);
  AtomState s;
  s.level = DriveLevel::hi;
  s.r = {0.0, amplitude, 0.0};
  Rng rng(1);
  std::vector<double> ups;
  double prev = s.r.y;
  const int steps = int(span / cfg.dt_dynamics());
  for (int k = 0; k < steps; ++k) {
    const double t0 = s.t;
    prop.step(s, rng);
    if (prev < 0.0 && s.r.y >= 0.0) ups.push_back(t0 + (s.t - t0) * (-prev) / (s.r.y - prev));
    prev = s.r.y;
  }
  REQUIRE(ups.size() >= 3);
  return 0.5 * (ups.back() - ups.front()) / double(ups.size() - 1);
}

}  // namespace

TEST_CASE("simulated rho periods follow the quadrature curve") {
  const RadialMaps maps = frictionless();
  const double w = maps.params().waist;
  for (double f : {0.15, 0.4, 0.7}) {
    const double quad = radial_period(maps, DriveLevel::hi, f * w).period;
    const double sim = simulated_rho_period(maps, f * w, 8 * quad);
    CHECK(sim == doctest::Approx(quad).epsilon(0.01));
  }
}

TEST_CASE("small amplitude period tends to the harmonic value") {
  const RadialMaps maps = frictionless();
  const double quad = radial_period(maps, DriveLevel::hi, 0.02 * maps.params().waist).period;
  CHECK(quad == doctest::Approx(harmonic_rho_period(maps, DriveLevel::hi)).epsilon(0.01));
}

TEST_CASE("energy is conserved without diffusion") {
  const RadialMaps maps = frictionless();
  const SimConfig cfg = pinned(1e-6, 30);
  Propagator prop(maps, cfg);
  AtomState s;
  s.level = DriveLevel::hi;
  s.r = {0.0, 0.5 * maps.params().waist, 0.1 * maps.params().waist};
  s.p = {0.0, 0.0, 0.02 * maps.params().mass};
  Rng rng(3);
  const double e0 = prop.total_energy(s, DriveLevel::hi);
  const double l0 = s.angular_momentum();
  for (int k = 0; k < 30 * 2000; ++k) prop.step(s, rng);
  CHECK(std::abs(prop.total_energy(s, DriveLevel::hi) - e0) < 1e-3 * maps.depth(DriveLevel::hi));
  CHECK(s.angular_momentum() == doctest::Approx(l0).epsilon(1e-6));
}

TEST_CASE("diffusion heats on average") {
  const RadialMaps& maps = small_maps();
  const SimConfig cfg = pinned(1e-6, 30);
  double gain = 0.0;
  for (int run = 0; run < 50; ++run) {
    Propagator prop(maps, cfg);
    AtomState s;
    s.level = DriveLevel::hi;
    s.r = {0.0, 0.3 * maps.params().waist, 0.0};
    Rng rng = make_rng(7, run, 1);
    const double e0 = prop.total_energy(s, DriveLevel::hi);
    for (int k = 0; k < 30 * 300; ++k) prop.step(s, rng);
    gain += prop.total_energy(s, DriveLevel::hi) - e0;
  }
  CHECK(gain > 0.0);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = make_rng(5, 3, 1), b = make_rng(5, 3, 1), c = make_rng(5, 3, 2), d = make_rng(5, 4, 1);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("trajectory is a pure function of config, seed and index") {
  const RadialMaps& maps = small_maps();
  SimConfig cfg = SimConfig::full3d_default();
  cfg.substeps = 50;
  cfg.t_max = 3e-3;
  ControllerConfig ctl;
  ctl.trigger_window = 20e-6;
  MeasurementConfig meas;
  meas.noise.noise_gain = 0.01;
  for (std::uint64_t i : {0u, 5u}) {
    const auto a = run_trajectory(cfg, maps, ctl, meas, i);
    const auto b = run_trajectory(cfg, maps, ctl, meas, i);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.termination == b.termination);
    CHECK(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.samples.size(); k += 97) {
      CHECK(a.samples[k].y == b.samples[k].y);
      CHECK(a.samples[k].t_noisy == b.samples[k].t_noisy);
    }
  }
}

TEST_CASE("unreachable threshold never triggers") {
  const RadialMaps& maps = small_maps();
  SimConfig cfg = SimConfig::full3d_default();
  cfg.substeps = 50;
  ControllerConfig ctl;
  ctl.trigger_threshold = 1e9;
  const auto rec = run_trajectory(cfg, maps, ctl, MeasurementConfig{}, 0);
  CHECK_FALSE(rec.trigger_time);
  CHECK(rec.termination == Termination::never_triggered);
  CHECK(rec.events.empty());
}

TEST_CASE("initial conditions: entry window and fall speed") {
  SimConfig cfg;
  cfg.initial.mot_temperature = 0.0;
  const SystemParams p;
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const AtomState s = sample_initial(cfg, p, rng);
    CHECK(std::abs(s.r.y) <= cfg.initial.entry_half_width_over_waist * p.waist);
    CHECK(s.r.z == doctest::Approx(cfg.initial.start_height_over_waist * p.waist));
    const double v = -s.p.z / p.mass;
    CHECK(v == doctest::Approx(std::sqrt(2 * kStandardGravity * cfg.initial.drop_height)));
  }
}
