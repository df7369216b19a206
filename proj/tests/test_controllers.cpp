#include "cqed/controllers.hpp"
#include "small_maps.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace cqed;

namespace {

constexpr double us = 1e-6;

ControllerConfig base(Policy policy) {
  ControllerConfig c;
  c.policy = policy;
  c.trigger_window = 1 * us;
  return c;
}

// Triggers at t = 0, then feeds rate(t) each microsecond up to t_end.
std::vector<ControlEvent> drive(const ControllerConfig& cfg, double t_end, auto rate) {
  FeedbackController ctl(cfg, 0.5);
  std::vector<ControlEvent> out;
  for (int k = 0; k * us <= t_end + 1e-12; ++k) {
    const double t = k * us;
    const auto e = ctl.step({t, k == 0 ? 1.0 : 0.0, rate(t), true});
    if (e) out.push_back(*e);
  }
  return out;
}

}  // namespace

TEST_CASE("trigger threshold and check") {
  const RadialMaps& m = cqed::testing::small_maps();
  ControllerConfig cfg;
  const double thr = trigger_threshold(m, cfg);
  CHECK_FALSE(trigger_check(m.transmission(DriveLevel::exlo, m.rho_max()), thr));
  const auto& p = m.profile(DriveLevel::exlo);
  CHECK(trigger_check(p.transmission[p.peak_index], thr));
  cfg.trigger_threshold = std::numeric_limits<double>::infinity();
  CHECK_FALSE(trigger_check(1e9, trigger_threshold(m, cfg)));
}

TEST_CASE("trigger waits for a full averaging window") {
  ControllerConfig cfg = base(Policy::constant);
  cfg.trigger_window = 5 * us;
  FeedbackController ctl(cfg, 0.5);
  for (int k = 0; k < 4; ++k) CHECK_FALSE(ctl.step({k * us, 1.0, 0, false}));
  const auto e = ctl.step({4 * us, 1.0, 0, false});
  REQUIRE(e);
  CHECK(e->cause == EventCause::trigger);
  CHECK(e->to_level == DriveLevel::hi);
}

TEST_CASE("hysteresis: ramp in lo switches once at +lim") {
  HysteresisSwitch h(0.05, 0.03, DriveLevel::hi, DriveLevel::lo);
  DriveLevel level = DriveLevel::lo;
  int switches = 0;
  double at = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double rate = (k - 200) / 1000.0;
    if (const auto e = h.step(k * us, rate, level)) {
      ++switches;
      at = rate;
      level = e->to_level;
    }
  }
  CHECK(switches == 1);
  CHECK(at == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("hysteresis: inside the band never switches, dip to -0.08 does") {
  HysteresisSwitch h(0.05, 0.03, DriveLevel::hi, DriveLevel::lo);
  for (DriveLevel l : {DriveLevel::hi, DriveLevel::lo}) {
    for (int k = 0; k < 1000; ++k) {
      const double rate = -0.015 + 0.054 * std::sin(0.05 * k);
      CHECK_FALSE(h.step(k * us, rate, l));
    }
  }
  CHECK_FALSE(h.step(0, -0.0799, DriveLevel::hi));
  const auto e = h.step(0, -0.08, DriveLevel::hi);
  REQUIRE(e);
  CHECK(e->to_level == DriveLevel::lo);
  CHECK(e->cause == EventCause::hysteresis_down);
}

TEST_CASE("cycle delay: forced first switch, then period minus correction") {
  ControllerConfig cfg = base(Policy::cycle_delay);
  // Up crossings at 100 and 200 us (period 100 us); down crossing at 250 us.
  auto rate = [](double t) {
    const double k = std::round(t / us);
    if (k >= 250) return -0.1;
    if (k >= 200) return 0.1;
    if (k >= 150) return 0.0;
    if (k >= 100) return 0.1;
    return 0.0;
  };
  const auto ev = drive(cfg, 400 * us, rate);
  REQUIRE(ev.size() == 4);
  CHECK(ev[0].cause == EventCause::trigger);
  CHECK(ev[1].cause == EventCause::forced_first);
  CHECK(ev[1].t == doctest::Approx(45 * us));
  CHECK(ev[1].to_level == DriveLevel::lo);
  // First crossing uses the nominal period: 100 + 50 - 20.
  CHECK(ev[2].t == doctest::Approx(130 * us));
  CHECK(ev[2].to_level == DriveLevel::hi);
  // The 280 us up-switch finds the level already high and is dropped.
  CHECK(ev[3].t == doctest::Approx(330 * us));
  CHECK(ev[3].to_level == DriveLevel::lo);
  CHECK(ev[3].cause == EventCause::scheduled_wait);
}

TEST_CASE("cycle delay: no crossings, only the forced switch") {
  const auto ev = drive(base(Policy::cycle_delay), 1000 * us, [](double) { return 0.0; });
  REQUIRE(ev.size() == 2);
  CHECK(ev[1].t == doctest::Approx(45 * us));
}

TEST_CASE("cycle delay: newer crossing replaces the pending schedule") {
  // Down crossings at 210 us (due 290 us) and 240 us (period 30 us, due
  // 250 us): only the newer one executes.
  auto rate = [](double t) {
    const double k = std::round(t / us);
    if (k >= 240) return -0.1;
    if (k >= 225) return 0.0;
    if (k >= 210) return -0.1;
    if (k >= 200) return 0.1;
    if (k >= 150) return 0.0;
    if (k >= 100) return 0.1;
    return 0.0;
  };
  const auto ev = drive(base(Policy::cycle_delay), 400 * us, rate);
  REQUIRE(ev.size() == 5);
  CHECK(ev[2].t == doctest::Approx(130 * us));
  CHECK(ev[3].t == doctest::Approx(250 * us));
  CHECK(ev[3].to_level == DriveLevel::lo);
  CHECK(ev[4].t == doctest::Approx(280 * us));
  CHECK(ev[4].to_level == DriveLevel::hi);
}

TEST_CASE("cycle delay: degenerate periods clamp") {
  ControllerConfig cfg = base(Policy::cycle_delay);
  CycleDelayScheduler s(cfg, 0.0);
  s.step(0, 0.0, true, DriveLevel::hi);
  s.step(1 * us, 0.1, true, DriveLevel::hi);
  s.step(2 * us, 0.0, true, DriveLevel::hi);
  s.step(3 * us, 0.1, true, DriveLevel::hi);
  CHECK(s.last_period() == doctest::Approx(2 * us));
  s.step(4 * us, 0.0, true, DriveLevel::hi);
  s.step(900 * us, 0.1, true, DriveLevel::hi);
  CHECK(s.last_period() == doctest::Approx(4 * cfg.nominal_period));
}

TEST_CASE("open loop: alternating ticks every interval") {
  for (double interval : {45.0, 35.0}) {
    ControllerConfig cfg = base(Policy::open_loop);
    cfg.open_loop_interval = interval * us;
    const auto ev = drive(cfg, 4 * interval * us, [](double) { return 1.0; });
    REQUIRE(ev.size() == 5);
    for (int k = 1; k <= 4; ++k) {
      CHECK(ev[k].t == doctest::Approx(k * interval * us));
      CHECK(ev[k].cause == EventCause::open_loop_tick);
      CHECK(ev[k].to_level == (k % 2 ? DriveLevel::lo : DriveLevel::hi));
    }
  }
  ControllerConfig cfg = base(Policy::open_loop);
  cfg.open_loop_interval = std::numeric_limits<double>::infinity();
  CHECK(drive(cfg, 1000 * us, [](double) { return 1.0; }).size() == 1);
}

TEST_CASE("constant: nothing after the trigger") {
  CHECK(drive(base(Policy::constant), 1000 * us, [](double t) { return std::sin(t * 1e5); }).size() == 1);
}

TEST_CASE("determinism: same inputs give the same events") {
  auto rate = [](double t) { return 0.2 * std::sin(2 * kPi * t / (97 * us)); };
  for (Policy p : {Policy::hysteresis_direct, Policy::cycle_delay}) {
    const auto a = drive(base(p), 2000 * us, rate);
    const auto b = drive(base(p), 2000 * us, rate);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() > 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].t == b[i].t);
      CHECK(a[i].to_level == b[i].to_level);
      CHECK(a[i].from_level != a[i].to_level);
    }
  }
}

TEST_CASE("config validation") {
  ControllerConfig c;
  c.lim = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ControllerConfig{};
  c.delta = -0.01;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_policy("bang"), std::invalid_argument);
  CHECK(parse_policy("open_loop") == Policy::open_loop);
}
