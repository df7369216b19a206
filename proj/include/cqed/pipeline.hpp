#pragma once

// End-to-end steps shared by the command-line tool and the tests: table
// building with calibration, loading, and trajectory/campaign output.

#include "cqed/config.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace cqed {

struct Tables {
  RadialMaps maps;  // diffusion model carries the calibrated gain
  HeatingCalibration heating;
};

/// Builds the radial maps and calibrates the diffusion gain.
Tables build_tables(const RunConfig& config, unsigned jobs = 0);

/// Maps plus the "calibration" object stored in the CSV metadata.
nlohmann::ordered_json calibration_report(const Tables& tables, const RunConfig& config);

/// Writes the maps CSV with the calibration report and the config embedded.
void write_tables(const Tables& tables, const RunConfig& config, const std::string& path);

/// Throws MapError on a missing or malformed file.
RadialMaps load_tables(const std::string& path);

NoiseCalibration noise_calibration(const RadialMaps& maps, const RunConfig& config);

/// Trajectory CSV (SI units, unit-suffixed columns) with the config as a
/// '#' header line.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record,
                          const nlohmann::ordered_json& config);
nlohmann::ordered_json trajectory_json(const TrajectoryRecord& record, const MeritReport& report,
                                       const nlohmann::ordered_json& config);

/// One JSON object per line, in drop order.
void write_reports_jsonl(std::ostream& out, const std::vector<MeritReport>& reports);
/// Throws std::invalid_argument on a malformed line.
std::vector<MeritReport> read_reports_jsonl(std::istream& in);

}  // namespace cqed
