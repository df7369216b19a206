#include "cqed/config.hpp"

#include <stdexcept>

namespace cqed {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void read_level(const json& j, const char* key, DriveLevel& field) {
  if (j.contains(key)) field = parse_drive_level(j.at(key).get<std::string>());
}

std::string name(DriveLevel level) { return std::string(to_string(level)); }

}  // namespace

RunConfig RunConfig::preset(const std::string& preset_name) {
  RunConfig c;
  if (preset_name == "full3d") return c;
  if (preset_name == "full3d_reduced") {
    c.sim.substeps = 300;
    return c;
  }
  if (preset_name == "axial_pinned") {
    c.sim = SimConfig::axial_pinned_default();
    c.controller.trap_on_level = DriveLevel::exhi;
    c.controller.fb_high = DriveLevel::exhi;
    c.controller.fb_low = DriveLevel::hi;
    c.controller.open_loop_interval = 40e-6;
    return c;
  }
  throw std::invalid_argument("unknown preset '" + preset_name + "'");
}

CampaignSpec RunConfig::campaign_spec(const NoiseModel& calibrated_noise) const {
  CampaignSpec spec = campaign;
  spec.sim = sim;
  spec.controller = controller;
  spec.controller.dt_info = sim.dt_info;
  spec.measurement.estimator = estimator;
  spec.measurement.estimator.dt_info = sim.dt_info;
  spec.measurement.noise = noise.enabled ? calibrated_noise : NoiseModel{};
  return spec;
}

void RunConfig::validate() const {
  system.validate();
  if (hilbert.n_fock < 2) throw std::invalid_argument("hilbert.n_fock must be >= 2");
  if (grid.points < 16) throw std::invalid_argument("grid.points must be >= 16");
  if (grid.rho_max_over_waist < 3.0) throw std::invalid_argument("grid.rho_max_over_waist must be >= 3");
  if (diffusion.dimensional_projection < 0.0) {
    throw std::invalid_argument("diffusion.dimensional_projection must be >= 0");
  }
  if (noise.target_sensitivity < 0.0 || noise.floor < 0.0) {
    throw std::invalid_argument("noise targets must be >= 0");
  }
  sim.validate();
  controller.validate();
  samples_in(estimator.fir_window, sim.dt_info);
  samples_in(estimator.box_window, sim.dt_info);
  if (!(estimator.rc_cutoff > 0.0)) throw std::invalid_argument("estimator.rc_cutoff_hz must be > 0");
}

ojson to_json(const RunConfig& c) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["system"] = to_json(c.system);
  j["hilbert"] = {{"n_fock", c.hilbert.n_fock}};
  j["grid"] = {{"points", c.grid.points},
               {"rho_max_over_waist", c.grid.rho_max_over_waist},
               {"branch", std::string(to_string(c.branch))}};
  const auto& h = c.diffusion.spec;
  j["diffusion"] = {{"dimensional_projection", c.diffusion.dimensional_projection},
                    {"reference_level", name(h.level)},
                    {"amplitude_over_waist", h.amplitude_over_waist},
                    {"target_fraction", h.target_fraction},
                    {"runs", h.runs},
                    {"periods", h.periods},
                    {"dt_s", h.dt},
                    {"seed", h.seed},
                    {"tolerance", h.tolerance},
                    {"max_iterations", h.max_iterations}};
  j["noise"] = {{"enabled", c.noise.enabled},
                {"target_sensitivity_m_per_sqrt_hz", c.noise.target_sensitivity},
                {"law", std::string(to_string(c.noise.law))},
                {"floor", c.noise.floor},
                {"level", name(c.noise.level)}};
  j["estimator"] = {{"rc_cutoff_hz", c.estimator.rc_cutoff},
                    {"fir_window_s", c.estimator.fir_window},
                    {"box_window_s", c.estimator.box_window}};
  const auto& s = c.sim;
  j["sim"] = {{"mode", std::string(to_string(s.mode))},
              {"dt_info_s", s.dt_info},
              {"substeps", s.substeps},
              {"t_max_s", s.t_max},
              {"gravity", s.gravity},
              {"axial_diffusion_factor", s.axial_diffusion_factor},
              {"friction_per_s", s.friction},
              {"escape_radius_over_waist", s.escape_radius_over_waist},
              {"escape_energy_steps", s.escape_energy_steps},
              {"initial",
               {{"drop_height_m", s.initial.drop_height},
                {"mot_temperature_k", s.initial.mot_temperature},
                {"start_height_over_waist", s.initial.start_height_over_waist},
                {"entry_half_width_over_waist", s.initial.entry_half_width_over_waist}}}};
  const auto& k = c.controller;
  j["controller"] = {{"policy", std::string(to_string(k.policy))},
                     {"rate_source", std::string(to_string(k.rate_source))},
                     {"lim_m_per_s", k.lim},
                     {"delta_m_per_s", k.delta},
                     {"first_switch_delay_s", k.first_switch_delay},
                     {"wait_correction_s", k.wait_correction},
                     {"nominal_period_s", k.nominal_period},
                     {"open_loop_interval_s", k.open_loop_interval},
                     {"trigger_fraction", k.trigger_fraction},
                     {"trigger_threshold", k.trigger_threshold ? ojson(*k.trigger_threshold)
                                                               : ojson(nullptr)},
                     {"trigger_window_s", k.trigger_window},
                     {"probe_level", name(k.probe_level)},
                     {"trap_on_level", name(k.trap_on_level)},
                     {"fb_high", name(k.fb_high)},
                     {"fb_low", name(k.fb_low)}};
  const auto& w = c.campaign.windows;
  j["campaign"] = {{"n_drops", c.campaign.n_drops},
                   {"master_seed", c.campaign.master_seed},
                   {"lifetime_burn_in_s", c.campaign.lifetime_burn_in},
                   {"energy_reference", name(c.campaign.measurement.energy_reference)},
                   {"windows",
                    {{"early_begin_s", w.early_begin},
                     {"early_end_s", w.early_end},
                     {"late_begin_s", w.late_begin},
                     {"late_end_s", w.late_end},
                     {"late_prime_begin_s", w.late_prime_begin},
                     {"late_prime_end_s", w.late_prime_end},
                     {"shift_s", w.shift}}}};
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  require_known_keys(j,
                     {"schema_version", "system", "hilbert", "grid", "diffusion", "noise",
                      "estimator", "sim", "controller", "campaign"},
                     "config");
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version " + j.at("schema_version").dump());
  }
  if (j.contains("system")) c.system = system_params_from_json(j.at("system"), c.system);
  if (j.contains("hilbert")) {
    const auto& h = j.at("hilbert");
    require_known_keys(h, {"n_fock"}, "hilbert");
    read(h, "n_fock", c.hilbert.n_fock);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    require_known_keys(g, {"points", "rho_max_over_waist", "branch"}, "grid");
    read(g, "points", c.grid.points);
    read(g, "rho_max_over_waist", c.grid.rho_max_over_waist);
    if (g.contains("branch")) c.branch = parse_inversion_branch(g.at("branch").get<std::string>());
  }
  if (j.contains("diffusion")) {
    const auto& d = j.at("diffusion");
    require_known_keys(d,
                       {"dimensional_projection", "reference_level", "amplitude_over_waist",
                        "target_fraction", "runs", "periods", "dt_s", "seed", "tolerance",
                        "max_iterations"},
                       "diffusion");
    auto& h = c.diffusion.spec;
    read(d, "dimensional_projection", c.diffusion.dimensional_projection);
    read_level(d, "reference_level", h.level);
    read(d, "amplitude_over_waist", h.amplitude_over_waist);
    read(d, "target_fraction", h.target_fraction);
    read(d, "runs", h.runs);
    read(d, "periods", h.periods);
    read(d, "dt_s", h.dt);
    read(d, "seed", h.seed);
    read(d, "tolerance", h.tolerance);
    read(d, "max_iterations", h.max_iterations);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    require_known_keys(n, {"enabled", "target_sensitivity_m_per_sqrt_hz", "law", "floor", "level"},
                       "noise");
    read(n, "enabled", c.noise.enabled);
    read(n, "target_sensitivity_m_per_sqrt_hz", c.noise.target_sensitivity);
    if (n.contains("law")) c.noise.law = parse_noise_law(n.at("law").get<std::string>());
    read(n, "floor", c.noise.floor);
    read_level(n, "level", c.noise.level);
  }
  if (j.contains("estimator")) {
    const auto& e = j.at("estimator");
    require_known_keys(e, {"rc_cutoff_hz", "fir_window_s", "box_window_s"}, "estimator");
    read(e, "rc_cutoff_hz", c.estimator.rc_cutoff);
    read(e, "fir_window_s", c.estimator.fir_window);
    read(e, "box_window_s", c.estimator.box_window);
  }
  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    require_known_keys(s,
                       {"mode", "dt_info_s", "substeps", "t_max_s", "gravity",
                        "axial_diffusion_factor", "friction_per_s", "escape_radius_over_waist",
                        "escape_energy_steps", "initial"},
                       "sim");
    if (s.contains("mode")) c.sim.mode = parse_sim_mode(s.at("mode").get<std::string>());
    read(s, "dt_info_s", c.sim.dt_info);
    read(s, "substeps", c.sim.substeps);
    read(s, "t_max_s", c.sim.t_max);
    read(s, "gravity", c.sim.gravity);
    read(s, "axial_diffusion_factor", c.sim.axial_diffusion_factor);
    read(s, "friction_per_s", c.sim.friction);
    read(s, "escape_radius_over_waist", c.sim.escape_radius_over_waist);
    read(s, "escape_energy_steps", c.sim.escape_energy_steps);
    if (s.contains("initial")) {
      const auto& i = s.at("initial");
      require_known_keys(i,
                         {"drop_height_m", "mot_temperature_k", "start_height_over_waist",
                          "entry_half_width_over_waist"},
                         "sim.initial");
      read(i, "drop_height_m", c.sim.initial.drop_height);
      read(i, "mot_temperature_k", c.sim.initial.mot_temperature);
      read(i, "start_height_over_waist", c.sim.initial.start_height_over_waist);
      read(i, "entry_half_width_over_waist", c.sim.initial.entry_half_width_over_waist);
    }
  }
  if (j.contains("controller")) {
    const auto& k = j.at("controller");
    require_known_keys(k,
                       {"policy", "rate_source", "lim_m_per_s", "delta_m_per_s",
                        "first_switch_delay_s", "wait_correction_s", "nominal_period_s",
                        "open_loop_interval_s", "trigger_fraction", "trigger_threshold",
                        "trigger_window_s", "probe_level", "trap_on_level", "fb_high", "fb_low"},
                       "controller");
    auto& o = c.controller;
    if (k.contains("policy")) o.policy = parse_policy(k.at("policy").get<std::string>());
    if (k.contains("rate_source")) {
      o.rate_source = parse_rate_source(k.at("rate_source").get<std::string>());
    }
    read(k, "lim_m_per_s", o.lim);
    read(k, "delta_m_per_s", o.delta);
    read(k, "first_switch_delay_s", o.first_switch_delay);
    read(k, "wait_correction_s", o.wait_correction);
    read(k, "nominal_period_s", o.nominal_period);
    read(k, "open_loop_interval_s", o.open_loop_interval);
    read(k, "trigger_fraction", o.trigger_fraction);
    if (k.contains("trigger_threshold")) {
      const auto& t = k.at("trigger_threshold");
      o.trigger_threshold = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
    }
    read(k, "trigger_window_s", o.trigger_window);
    read_level(k, "probe_level", o.probe_level);
    read_level(k, "trap_on_level", o.trap_on_level);
    read_level(k, "fb_high", o.fb_high);
    read_level(k, "fb_low", o.fb_low);
  }
  if (j.contains("campaign")) {
    const auto& k = j.at("campaign");
    require_known_keys(k,
                       {"n_drops", "master_seed", "lifetime_burn_in_s", "energy_reference",
                        "windows"},
                       "campaign");
    read(k, "n_drops", c.campaign.n_drops);
    read(k, "master_seed", c.campaign.master_seed);
    read(k, "lifetime_burn_in_s", c.campaign.lifetime_burn_in);
    read_level(k, "energy_reference", c.campaign.measurement.energy_reference);
    if (k.contains("windows")) {
      const auto& w = k.at("windows");
      require_known_keys(w,
                         {"early_begin_s", "early_end_s", "late_begin_s", "late_end_s",
                          "late_prime_begin_s", "late_prime_end_s", "shift_s"},
                         "campaign.windows");
      auto& o = c.campaign.windows;
      read(w, "early_begin_s", o.early_begin);
      read(w, "early_end_s", o.early_end);
      read(w, "late_begin_s", o.late_begin);
      read(w, "late_end_s", o.late_end);
      read(w, "late_prime_begin_s", o.late_prime_begin);
      read(w, "late_prime_end_s", o.late_prime_end);
      read(w, "shift_s", o.shift);
    }
  }
  c.validate();
  return c;
}

}  // namespace cqed
