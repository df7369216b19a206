#include "cqed/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cqed {

Tables build_tables(const RunConfig& config, unsigned jobs) {
  config.validate();
  MapBuildOptions options;
  options.grid = config.grid;
  options.branch = config.branch;
  options.jobs = jobs;
  DiffusionModel diffusion = DiffusionModel::recoil(config.system);
  diffusion.dimensional_projection = config.diffusion.dimensional_projection;
  RadialMaps raw = build_maps(config.system, config.hilbert, options, diffusion);
  HeatingCalibration heating = calibrate_diffusion(raw, config.diffusion.spec);
  return Tables{raw.with_diffusion(heating.model), heating};
}

nlohmann::ordered_json calibration_report(const Tables& tables, const RunConfig& config) {
  const RadialMaps& maps = tables.maps;
  nlohmann::ordered_json levels = nlohmann::ordered_json::object();
  for (DriveLevel l : maps.levels()) {
    const auto& p = maps.profile(l);
    levels[std::string(to_string(l))] = {
        {"depth_J", p.depth},
        {"depth_K", p.depth / kBoltzmann},
        {"fitted_waist_m", p.fitted_waist},
        {"fitted_waist_over_w0", p.fitted_waist / maps.params().waist},
        {"fit_relative_rms", p.fit_relative_rms},
        {"peak_rho_m", maps.grid()[p.peak_index]},
        {"max_transmission", p.transmission[p.peak_index]},
        {"empty_transmission", maps.empty_cavity_transmission(l)},
    };
  }
  const NoiseCalibration noise = noise_calibration(maps, config);
  const HeatingCalibration& h = tables.heating;
  return {
      {"levels", levels},
      {"diffusion",
       {{"calibration_gain", h.model.calibration_gain},
        {"dimensional_projection", h.model.dimensional_projection},
        {"recoil_scale", h.model.recoil_scale},
        {"orbital_period_s", h.orbital_period},
        {"heating_per_orbit_J", h.heating_per_orbit},
        {"heating_per_orbit_K", h.heating_per_orbit / kBoltzmann},
        {"target_per_orbit_J", h.target_per_orbit},
        {"iterations", h.iterations}}},
      {"noise",
       {{"noise_gain", noise.model.noise_gain},
        {"law", std::string(to_string(noise.model.law))},
        {"floor", noise.model.floor},
        {"steepest_rho_m", noise.steepest_rho},
        {"steepest_slope_per_m", noise.steepest_slope},
        {"sensitivity_m_per_sqrt_hz", noise.sensitivity},
        {"resolvable_amplitude_m", resolvable_amplitude(noise.sensitivity, h.orbital_period)}}},
  };
}

void write_tables(const Tables& tables, const RunConfig& config, const std::string& path) {
  nlohmann::ordered_json extra = {{"calibration", calibration_report(tables, config)},
                                  {"config", to_json(config)}};
  write_maps_csv(tables.maps, path, extra.dump());
}

RadialMaps load_tables(const std::string& path) {
  if (!std::ifstream(path)) throw MapError("cannot open tables '" + path + "'");
  return read_maps_csv(path);
}

NoiseCalibration noise_calibration(const RadialMaps& maps, const RunConfig& config) {
  NoiseModel base;
  base.law = config.noise.law;
  base.floor = config.noise.floor;
  return calibrate_noise(maps, config.noise.level, config.noise.target_sensitivity,
                         config.sim.dt_info, base);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record,
                          const nlohmann::ordered_json& config) {
  out << "# config " << config.dump() << '\n';
  out << "t_s,rho_m,rho_dot_m_per_s,x_m,y_m,z_m,L_kg_m2_per_s,level,T_noiseless,T_noisy,"
         "T_filtered,rho_est_m,rho_dot_est_m_per_s,control_rate_m_per_s,energy_ref_J\n";
  out << std::setprecision(17);
  for (const auto& s : record.samples) {
    out << s.t << ',' << s.rho << ',' << s.rho_dot << ',' << s.x << ',' << s.y << ',' << s.z << ','
        << s.angular_momentum << ',' << to_string(s.level) << ',' << s.t_noiseless << ','
        << s.t_noisy << ',' << s.t_filtered << ',' << s.rho_est << ',' << s.rho_dot_est << ','
        << s.control_rate << ',' << s.energy_ref << '\n';
  }
}

nlohmann::ordered_json trajectory_json(const TrajectoryRecord& record, const MeritReport& report,
                                       const nlohmann::ordered_json& config) {
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : record.events) {
    events.push_back({{"t_s", e.t},
                      {"from", std::string(to_string(e.from_level))},
                      {"to", std::string(to_string(e.to_level))},
                      {"cause", std::string(to_string(e.cause))}});
  }
  nlohmann::ordered_json j;
  j["termination"] = std::string(to_string(record.termination));
  j["trigger_time_s"] = record.trigger_time ? nlohmann::ordered_json(*record.trigger_time) : nullptr;
  j["end_time_s"] = record.end_time;
  j["trigger_threshold"] = record.trigger_threshold;
  j["report"] = to_json(report);
  j["events"] = events;
  j["config"] = config;
  return j;
}

void write_reports_jsonl(std::ostream& out, const std::vector<MeritReport>& reports) {
  for (const auto& r : reports) out << to_json(r).dump() << '\n';
}

std::vector<MeritReport> read_reports_jsonl(std::istream& in) {
  std::vector<MeritReport> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(merit_report_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cqed
