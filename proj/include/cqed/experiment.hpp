#pragma once

// Campaign runner and trajectory analysis: figure of merit, energy
// accounting, lifetimes, histograms and orbit reconstruction.

#include "cqed/atom_dynamics.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cqed {

/// Windows measured from the trigger switch, s. `shift` moves all of them.
struct MeritWindows {
  double early_begin = 15e-6;
  double early_end = 215e-6;
  double late_begin = 415e-6;
  double late_end = 615e-6;
  double late_prime_begin = 1015e-6;
  double late_prime_end = 1215e-6;
  double shift = 0.0;
};

struct MeritReport {
  std::uint64_t index = 0;
  bool triggered = false;
  Termination termination = Termination::t_max;
  std::optional<double> trigger_time;
  std::optional<double> dwell;
  std::optional<double> var_early;  // (m/s)^2
  std::optional<double> var_late;
  std::optional<double> var_late_prime;
  std::optional<double> merit;        // var_early / var_late
  std::optional<double> merit_prime;  // var_early / var_late_prime
  std::optional<double> energy_change;           // J, late' minus early
  std::optional<double> energy_change_fraction;  // relative to early energy above trap bottom
  std::size_t switch_count = 0;
};

/// Sample variance of rho_dot_est over [trigger + begin, trigger + end).
std::optional<double> window_variance(const TrajectoryRecord& record, double begin, double end);

/// M and M' (absent when the dwell does not cover the windows).
MeritReport figure_of_merit(const TrajectoryRecord& record, const MeritWindows& windows = {});

struct EnergyChange {
  double early = 0.0;  // mean energy_ref, J
  double late = 0.0;
  double change = 0.0;
  double fraction = 0.0;  // change / (early + depth)
};

/// Mean reference energy in the late-prime window minus the early window.
/// `reference_depth` is U0 of the reference level. Absent for short dwells.
std::optional<EnergyChange> energy_accounting(const TrajectoryRecord& record,
                                              double reference_depth,
                                              const MeritWindows& windows = {});

struct CampaignSpec {
  std::size_t n_drops = 100;
  std::uint64_t master_seed = 1;
  unsigned jobs = 0;  // 0 = hardware concurrency
  SimConfig sim;
  ControllerConfig controller;
  MeasurementConfig measurement;
  MeritWindows windows;
  double lifetime_burn_in = 200e-6;
};

struct LifetimeFit {
  std::size_t samples = 0;   // dwell > burn-in
  std::size_t events = 0;    // escapes among them
  double lifetime = 0.0;     // s; burn-in excluded from the exposure
  double standard_error = 0.0;
  bool valid = false;
};

/// Exponential MLE with right censoring (t_max endings are censored).
LifetimeFit fit_lifetime(const std::vector<double>& dwell, const std::vector<bool>& escaped,
                         double burn_in);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;
};
Histogram log_histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins);
Histogram linear_histogram(const std::vector<double>& values, double lo, double hi,
                           std::size_t bins);

struct WelchResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;          // (mean_a - mean_b) / se
  double dof = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};
WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);

struct MeanStat {
  std::size_t n = 0;
  double mean = 0.0;
  double standard_error = 0.0;
};
MeanStat mean_stat(const std::vector<double>& values);

struct CampaignSummary {
  std::size_t drops = 0;
  std::size_t triggered = 0;
  std::size_t merit_eligible = 0;
  std::size_t merit_prime_eligible = 0;
  MeanStat merit;
  MeanStat merit_prime;
  MeanStat dwell;
  MeanStat energy_fraction;
  Histogram merit_histogram;
  Histogram merit_prime_histogram;
  Histogram dwell_histogram;
  LifetimeFit lifetime;
};

CampaignSummary summarize(const std::vector<MeritReport>& reports, double burn_in);

struct CampaignResult {
  std::vector<MeritReport> reports;  // by drop index
  CampaignSummary summary;
};

/// Drop `index` of the campaign (the same trajectory run_campaign produces).
TrajectoryRecord run_drop(const CampaignSpec& spec, const RadialMaps& maps, std::uint64_t index);
MeritReport drop_report(const TrajectoryRecord& record, const CampaignSpec& spec,
                        const RadialMaps& maps, std::uint64_t index);

/// Runs the drops on a worker pool; results are stored by index so the
/// output does not depend on the number of workers.
CampaignResult run_campaign(const CampaignSpec& spec, const RadialMaps& maps);

nlohmann::ordered_json to_json(const MeritReport& report);
MeritReport merit_report_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CampaignSummary& summary);
nlohmann::ordered_json to_json(const Histogram& histogram);
nlohmann::ordered_json to_json(const LifetimeFit& fit);

struct Reconstruction {
  double angular_momentum = 0.0;  // |L|, kg m^2/s
  std::vector<double> t;
  std::vector<double> rho;
  std::vector<double> theta;  // theta0 = 0, positive handedness
  std::size_t turning_points = 0;
  bool circular = false;
  std::vector<std::string> ambiguities;
};

/// |L| from the radial turning points of rho(t) in V_eff at `level`, then
/// theta(t) by integrating L / (m rho^2). Throws std::domain_error without
/// a usable pair of turning points (unless the orbit is circular).
Reconstruction reconstruct_trajectory(const std::vector<double>& t, const std::vector<double>& rho,
                                      const RadialMaps& maps, DriveLevel level);

}  // namespace cqed
