#include "cqed/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace cqed {

RcLowpass::RcLowpass(double cutoff_hz, double dt) {
  if (!(cutoff_hz > 0.0) || !(dt > 0.0)) throw std::invalid_argument("RC cutoff and dt must be > 0");
  const double rc = 1.0 / (kTwoPi * cutoff_hz);
  alpha_ = dt / (rc + dt);
}

double RcLowpass::step(double sample) {
  y_ += alpha_ * (sample - y_);
  return y_;
}

LsqSlopeFir::LsqSlopeFir(std::size_t window, double dt)
    : buffer_(window, 0.0), weights_(window, 0.0), dt_(dt) {
  if (window < 2) throw std::invalid_argument("slope window needs at least 2 samples");
  const double n = static_cast<double>(window);
  const double mean = (n - 1.0) / 2.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < window; ++i) sxx += (i - mean) * (i - mean);
  for (std::size_t i = 0; i < window; ++i) weights_[i] = (i - mean) / (sxx * dt);
}

double LsqSlopeFir::step(double sample) {
  buffer_[head_] = sample;
  head_ = (head_ + 1) % buffer_.size();
  if (count_ < buffer_.size()) ++count_;
  if (!full()) return 0.0;
  double slope = 0.0;
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    slope += weights_[i] * buffer_[(head_ + i) % buffer_.size()];
  }
  return slope;
}

double LsqSlopeFir::delay() const {
  return 0.5 * static_cast<double>(buffer_.size() - 1) * dt_;
}

BoxFilter::BoxFilter(std::size_t window) : buffer_(window, 0.0) {
  if (window == 0) throw std::invalid_argument("box window must be >= 1 sample");
}

double BoxFilter::step(double sample) {
  if (count_ == buffer_.size()) {
    sum_ -= buffer_[head_];
  } else {
    ++count_;
  }
  buffer_[head_] = sample;
  sum_ += sample;
  head_ = (head_ + 1) % buffer_.size();
  if (head_ == 0) {
    // refresh the running sum once per wrap to bound rounding drift
    sum_ = 0.0;
    for (std::size_t i = 0; i < count_; ++i) sum_ += buffer_[i];
  }
  return sum_ / static_cast<double>(count_);
}

std::size_t samples_in(double duration, double dt) {
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw std::invalid_argument("window must be a positive integer multiple of dt_info");
  }
  return static_cast<std::size_t>(rounded);
}

double to_rho(const RadialMaps& maps, DriveLevel level, double filtered_t) {
  return maps.invert_transmission(level, filtered_t);
}

EstimatorChain::EstimatorChain(const RadialMaps& maps, const EstimatorConfig& config)
    : maps_(&maps),
      config_(config),
      rc_(config.rc_cutoff, config.dt_info),
      fir_(samples_in(config.fir_window, config.dt_info), config.dt_info),
      box_(samples_in(config.box_window, config.dt_info)) {}

EstimateSample EstimatorChain::step(double t_noisy, DriveLevel level, double true_rho_dot) {
  EstimateSample out;
  out.filtered_t = rc_.step(t_noisy);
  out.rho_est = to_rho(*maps_, level, out.filtered_t);
  out.rho_dot_est = fir_.step(out.rho_est);
  out.rate_valid = fir_.full();
  out.true_rate_box = box_.step(true_rho_dot);
  return out;
}

}  // namespace cqed
