#include "cqed/controllers.hpp"

#include "cqed/field_maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cqed {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::constant: return "constant";
    case Policy::hysteresis_direct: return "hysteresis_direct";
    case Policy::cycle_delay: return "cycle_delay";
    case Policy::open_loop: return "open_loop";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  for (Policy p : {Policy::constant, Policy::hysteresis_direct, Policy::cycle_delay,
                   Policy::open_loop}) {
    if (to_string(p) == name) return p;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(RateSource source) {
  return source == RateSource::estimate ? "estimate" : "true_box";
}

RateSource parse_rate_source(std::string_view name) {
  if (name == "estimate") return RateSource::estimate;
  if (name == "true_box") return RateSource::true_box;
  throw std::invalid_argument("unknown rate source '" + std::string(name) + "'");
}

std::string_view to_string(EventCause cause) {
  switch (cause) {
    case EventCause::trigger: return "trigger";
    case EventCause::hysteresis_up: return "hysteresis_up";
    case EventCause::hysteresis_down: return "hysteresis_down";
    case EventCause::scheduled_wait: return "scheduled_wait";
    case EventCause::open_loop_tick: return "open_loop_tick";
    case EventCause::forced_first: return "forced_first";
  }
  return "?";
}

EventCause parse_event_cause(std::string_view name) {
  for (EventCause c : {EventCause::trigger, EventCause::hysteresis_up, EventCause::hysteresis_down,
                       EventCause::scheduled_wait, EventCause::open_loop_tick,
                       EventCause::forced_first}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown event cause '" + std::string(name) + "'");
}

void ControllerConfig::validate() const {
  if (!(lim > 0.0)) throw std::invalid_argument("controller lim must be > 0");
  if (!(delta >= 0.0)) throw std::invalid_argument("controller delta must be >= 0");
  if (!(dt_info > 0.0)) throw std::invalid_argument("controller dt_info must be > 0");
  if (!(first_switch_delay >= 0.0) || !(wait_correction >= 0.0) || !(nominal_period > 0.0)) {
    throw std::invalid_argument("controller delays must be >= 0 and nominal_period > 0");
  }
  samples_in(trigger_window, dt_info);
  if (!(open_loop_interval > 0.0)) throw std::invalid_argument("open_loop_interval must be > 0");
  if (fb_high == fb_low) throw std::invalid_argument("fb_high and fb_low must differ");
  if (trap_on_level == probe_level) throw std::invalid_argument("trap_on_level equals probe_level");
}

double trigger_threshold(const RadialMaps& maps, const ControllerConfig& config) {
  if (config.trigger_threshold) return *config.trigger_threshold;
  const auto& p = maps.profile(config.probe_level);
  const double t_max = *std::max_element(p.transmission.begin(), p.transmission.end());
  const double t_edge = p.transmission.back();
  return maps.empty_cavity_transmission(config.probe_level) +
         config.trigger_fraction * (t_max - t_edge);
}

bool trigger_check(double filtered_t, double threshold) { return filtered_t > threshold; }

HysteresisSwitch::HysteresisSwitch(double lim, double delta, DriveLevel high, DriveLevel low)
    : lim_(lim), delta_(delta), high_(high), low_(low) {}

std::optional<ControlEvent> HysteresisSwitch::step(double t, double rate,
                                                   DriveLevel current) const {
  if (current == high_ && rate <= -(lim_ + delta_)) {
    return ControlEvent{t, high_, low_, EventCause::hysteresis_down};
  }
  if (current == low_ && rate >= lim_) {
    return ControlEvent{t, low_, high_, EventCause::hysteresis_up};
  }
  return std::nullopt;
}

CycleDelayScheduler::CycleDelayScheduler(const ControllerConfig& config, double trigger_time)
    : config_(config),
      forced_time_(trigger_time + config.first_switch_delay),
      last_period_(config.nominal_period) {}

void CycleDelayScheduler::crossing(double t, bool upward) {
  auto& last = upward ? last_up_ : last_down_;
  if (last) {
    last_period_ = std::clamp(t - *last, config_.dt_info, 4.0 * config_.nominal_period);
  }
  last = t;
  if (forced_done_) {
    (upward ? pending_up_ : pending_down_) = t + last_period_ - config_.wait_correction;
  }
}

std::optional<ControlEvent> CycleDelayScheduler::step(double t, double rate, bool rate_valid,
                                                      DriveLevel current) {
  const double tol = 1e-3 * config_.dt_info;
  if (rate_valid) {
    if (prev_rate_) {
      const double up = config_.lim;
      const double down = -(config_.lim + config_.delta);
      if (*prev_rate_ < up && rate >= up) crossing(t, true);
      if (*prev_rate_ > down && rate <= down) crossing(t, false);
    }
    prev_rate_ = rate;
  } else {
    prev_rate_.reset();
  }

  if (!forced_done_) {
    if (t + tol < forced_time_) return std::nullopt;
    forced_done_ = true;
    if (current != config_.fb_low) {
      return ControlEvent{t, current, config_.fb_low, EventCause::forced_first};
    }
    return std::nullopt;
  }

  for (;;) {
    std::optional<double>* next = nullptr;
    if (pending_up_ && *pending_up_ <= t + tol) next = &pending_up_;
    if (pending_down_ && *pending_down_ <= t + tol && (!next || *pending_down_ < **next)) {
      next = &pending_down_;
    }
    if (!next) return std::nullopt;
    const DriveLevel target = next == &pending_up_ ? config_.fb_high : config_.fb_low;
    next->reset();
    if (target != current) return ControlEvent{t, current, target, EventCause::scheduled_wait};
  }
}

OpenLoopClock::OpenLoopClock(double trigger_time, double interval, double dt_info,
                             DriveLevel high, DriveLevel low)
    : next_(trigger_time + interval),
      interval_(interval),
      tolerance_(1e-3 * dt_info),
      high_(high),
      low_(low) {}

std::optional<ControlEvent> OpenLoopClock::step(double t, DriveLevel current) {
  if (!std::isfinite(next_) || t + tolerance_ < next_) return std::nullopt;
  while (next_ <= t + tolerance_) next_ += interval_;
  const DriveLevel target = current == high_ ? low_ : high_;
  return ControlEvent{t, current, target, EventCause::open_loop_tick};
}

FeedbackController::FeedbackController(const ControllerConfig& config, double threshold)
    : config_(config),
      threshold_(threshold),
      trigger_box_(samples_in(config.trigger_window, config.dt_info)),
      level_(config.probe_level) {
  config_.validate();
}

std::optional<ControlEvent> FeedbackController::step(const ControllerInput& in) {
  std::optional<ControlEvent> event;
  if (!trigger_time_) {
    const double averaged = trigger_box_.step(in.filtered_t);
    if (!trigger_box_.full() || !trigger_check(averaged, threshold_)) return std::nullopt;
    trigger_time_ = in.t;
    event = ControlEvent{in.t, level_, config_.trap_on_level, EventCause::trigger};
    switch (config_.policy) {
      case Policy::constant: break;
      case Policy::hysteresis_direct:
        hysteresis_.emplace(config_.lim, config_.delta, config_.fb_high, config_.fb_low);
        break;
      case Policy::cycle_delay: cycle_.emplace(config_, in.t); break;
      case Policy::open_loop:
        clock_.emplace(in.t, config_.open_loop_interval, config_.dt_info, config_.fb_high,
                       config_.fb_low);
        break;
    }
  } else {
    const double rate = in.rate_valid ? in.rate : 0.0;
    if (hysteresis_) event = hysteresis_->step(in.t, rate, level_);
    if (cycle_) event = cycle_->step(in.t, in.rate, in.rate_valid, level_);
    if (clock_) event = clock_->step(in.t, level_);
  }
  if (event) level_ = event->to_level;
  return event;
}

}  // namespace cqed
