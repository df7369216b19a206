#pragma once

// Causal estimators on the 1 MHz transmission record.

#include "cqed/field_maps.hpp"

#include <cstddef>
#include <vector>

namespace cqed {

/// First-order IIR low-pass, y += alpha (x - y), alpha = dt / (RC + dt).
class RcLowpass {
 public:
  RcLowpass(double cutoff_hz, double dt);

  double step(double sample);
  double value() const { return y_; }
  double alpha() const { return alpha_; }
  void reset(double y = 0.0) { y_ = y; }

 private:
  double alpha_;
  double y_ = 0.0;
};

/// Least-squares slope over the trailing N samples. Emits 0 until full.
class LsqSlopeFir {
 public:
  LsqSlopeFir(std::size_t window, double dt);

  double step(double sample);
  bool full() const { return count_ >= buffer_.size(); }
  std::size_t window() const { return buffer_.size(); }
  /// Group delay of the slope estimate, (N - 1) dt / 2.
  double delay() const;
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> buffer_;
  std::vector<double> weights_;  // oldest first
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double dt_;
};

/// Trailing moving average; during warm-up averages the samples seen so far.
class BoxFilter {
 public:
  explicit BoxFilter(std::size_t window);

  double step(double sample);
  std::size_t window() const { return buffer_.size(); }
  bool full() const { return count_ == buffer_.size(); }

 private:
  std::vector<double> buffer_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double sum_ = 0.0;
};

/// Number of dt samples in `duration`; throws std::invalid_argument unless
/// the duration is a positive integer multiple of dt.
std::size_t samples_in(double duration, double dt);

struct EstimatorConfig {
  double rc_cutoff = 100e3;   // Hz
  double fir_window = 40e-6;  // s
  double box_window = 10e-6;  // s
  double dt_info = 1e-6;
};

struct EstimateSample {
  double filtered_t = 0.0;
  double rho_est = 0.0;      // m
  double rho_dot_est = 0.0;  // m/s
  bool rate_valid = false;
  double true_rate_box = 0.0;  // box-filtered true rho_dot, m/s
};

/// RC filter -> inverse lookup at the active level -> LSQ slope, plus the box
/// filter on the true radial velocity used by the noiseless study.
class EstimatorChain {
 public:
  EstimatorChain(const RadialMaps& maps, const EstimatorConfig& config);

  EstimateSample step(double t_noisy, DriveLevel level, double true_rho_dot);
  double nominal_delay() const { return fir_.delay(); }
  const EstimatorConfig& config() const { return config_; }

 private:
  const RadialMaps* maps_;
  EstimatorConfig config_;
  RcLowpass rc_;
  LsqSlopeFir fir_;
  BoxFilter box_;
};

/// Active-level inverse lookup of a filtered transmission value.
double to_rho(const RadialMaps& maps, DriveLevel level, double filtered_t);

}  // namespace cqed
