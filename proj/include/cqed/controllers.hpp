#pragma once

// Drive-level switching policies. A controller sees one sample per dt_info
// and returns at most one switch per sample.

#include "cqed/estimators.hpp"
#include "cqed/qjc_core.hpp"

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace cqed {

enum class Policy { constant, hysteresis_direct, cycle_delay, open_loop };
std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view name);

/// Which velocity signal drives the hysteresis logic.
enum class RateSource {
  estimate,  // rho_dot_est from the estimator chain
  true_box,  // box-filtered true rho_dot (noiseless study)
};
std::string_view to_string(RateSource source);
RateSource parse_rate_source(std::string_view name);

enum class EventCause {
  trigger,
  hysteresis_up,
  hysteresis_down,
  scheduled_wait,
  open_loop_tick,
  forced_first
};
std::string_view to_string(EventCause cause);
EventCause parse_event_cause(std::string_view name);

struct ControlEvent {
  double t = 0.0;
  DriveLevel from_level = DriveLevel::exlo;
  DriveLevel to_level = DriveLevel::hi;
  EventCause cause = EventCause::trigger;
};

struct ControllerConfig {
  Policy policy = Policy::cycle_delay;
  RateSource rate_source = RateSource::estimate;
  double lim = 0.05;    // m/s (= 0.05 um/us)
  double delta = 0.03;  // m/s
  double first_switch_delay = 45e-6;
  double wait_correction = 20e-6;
  double nominal_period = 50e-6;
  double open_loop_interval = 45e-6;
  double dt_info = 1e-6;
  // Trigger threshold = T_empty(probe) + trigger_fraction * (max T - T_edge)
  // at the probe level, unless trigger_threshold is set.
  double trigger_fraction = 0.65;
  std::optional<double> trigger_threshold;
  double trigger_window = 100e-6;  // box average of filtered T seen by the trigger
  DriveLevel probe_level = DriveLevel::exlo;
  DriveLevel trap_on_level = DriveLevel::hi;
  DriveLevel fb_high = DriveLevel::hi;
  DriveLevel fb_low = DriveLevel::lo;

  /// Throws std::invalid_argument on lim <= 0, delta < 0 or bad timing.
  void validate() const;
};

double trigger_threshold(const RadialMaps& maps, const ControllerConfig& config);
bool trigger_check(double filtered_t, double threshold);

/// Level-triggered asymmetric hysteresis: in `high`, rate <= -(lim + delta)
/// selects low; in `low`, rate >= lim selects high.
class HysteresisSwitch {
 public:
  HysteresisSwitch(double lim, double delta, DriveLevel high, DriveLevel low);
  std::optional<ControlEvent> step(double t, double rate, DriveLevel current) const;

 private:
  double lim_, delta_;
  DriveLevel high_, low_;
};

/// Delayed switching one measured period after each limit crossing, minus
/// the estimator delay correction.
class CycleDelayScheduler {
 public:
  CycleDelayScheduler(const ControllerConfig& config, double trigger_time);

  std::optional<ControlEvent> step(double t, double rate, bool rate_valid, DriveLevel current);
  double last_period() const { return last_period_; }
  std::optional<double> pending_up() const { return pending_up_; }
  std::optional<double> pending_down() const { return pending_down_; }

 private:
  void crossing(double t, bool upward);

  ControllerConfig config_;
  double forced_time_;
  bool forced_done_ = false;
  double last_period_;
  std::optional<double> prev_rate_;
  std::optional<double> last_up_, last_down_;
  std::optional<double> pending_up_, pending_down_;
};

class OpenLoopClock {
 public:
  OpenLoopClock(double trigger_time, double interval, double dt_info, DriveLevel high,
                DriveLevel low);
  std::optional<ControlEvent> step(double t, DriveLevel current);

 private:
  double next_;
  double interval_;
  double tolerance_;
  DriveLevel high_, low_;
};

struct ControllerInput {
  double t = 0.0;
  double filtered_t = 0.0;
  double rate = 0.0;  // per rate_source
  bool rate_valid = false;
};

/// Trigger detection (box-averaged filtered T against the threshold, armed
/// once the box is full)
/// followed by the configured post-trigger policy.
class FeedbackController {
 public:
  FeedbackController(const ControllerConfig& config, double threshold);

  std::optional<ControlEvent> step(const ControllerInput& input);
  DriveLevel level() const { return level_; }
  bool triggered() const { return trigger_time_.has_value(); }
  std::optional<double> trigger_time() const { return trigger_time_; }
  const ControllerConfig& config() const { return config_; }
  double threshold() const { return threshold_; }

 private:
  ControllerConfig config_;
  double threshold_;
  BoxFilter trigger_box_;
  DriveLevel level_;
  std::optional<double> trigger_time_;
  std::optional<HysteresisSwitch> hysteresis_;
  std::optional<CycleDelayScheduler> cycle_;
  std::optional<OpenLoopClock> clock_;
};

}  // namespace cqed
