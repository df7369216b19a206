#include "cqed/serialization.hpp"

#include <stdexcept>

namespace cqed {

void require_known_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                        const std::string& context) {
  if (!object.is_object()) throw std::invalid_argument(context + " must be a JSON object");
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw std::invalid_argument("unknown key '" + context + "." + item.key() + "'");
  }
}

nlohmann::ordered_json to_json(const SystemParams& p) {
  nlohmann::ordered_json j;
  j["g0_over_2pi_hz"] = p.g0 / kTwoPi;
  j["kappa_over_2pi_hz"] = p.kappa / kTwoPi;
  j["gamma_over_2pi_hz"] = p.gamma / kTwoPi;
  j["delta_cp_over_2pi_hz"] = p.delta_cp / kTwoPi;
  j["delta_ap_over_2pi_hz"] = p.delta_ap / kTwoPi;
  j["wavelength_m"] = p.wavelength;
  j["waist_m"] = p.waist;
  j["mass_kg"] = p.mass;
  j["drive_photons"] = {{"exlo", p.drive_levels.exlo},
                        {"lo", p.drive_levels.lo},
                        {"hi", p.drive_levels.hi},
                        {"exhi", p.drive_levels.exhi}};
  return j;
}

SystemParams system_params_from_json(const nlohmann::json& j, SystemParams p) {
  require_known_keys(j,
                     {"g0_over_2pi_hz", "kappa_over_2pi_hz", "gamma_over_2pi_hz",
                      "delta_cp_over_2pi_hz", "delta_ap_over_2pi_hz", "wavelength_m", "waist_m",
                      "mass_kg", "drive_photons"},
                     "system");
  auto angular = [&](const char* key, double& field) {
    if (j.contains(key)) field = kTwoPi * j.at(key).get<double>();
  };
  angular("g0_over_2pi_hz", p.g0);
  angular("kappa_over_2pi_hz", p.kappa);
  angular("gamma_over_2pi_hz", p.gamma);
  angular("delta_cp_over_2pi_hz", p.delta_cp);
  angular("delta_ap_over_2pi_hz", p.delta_ap);
  if (j.contains("wavelength_m")) p.wavelength = j.at("wavelength_m").get<double>();
  if (j.contains("waist_m")) p.waist = j.at("waist_m").get<double>();
  if (j.contains("mass_kg")) p.mass = j.at("mass_kg").get<double>();
  if (j.contains("drive_photons")) {
    const auto& d = j.at("drive_photons");
    require_known_keys(d, {"exlo", "lo", "hi", "exhi"}, "system.drive_photons");
    if (d.contains("exlo")) p.drive_levels.exlo = d.at("exlo").get<double>();
    if (d.contains("lo")) p.drive_levels.lo = d.at("lo").get<double>();
    if (d.contains("hi")) p.drive_levels.hi = d.at("hi").get<double>();
    if (d.contains("exhi")) p.drive_levels.exhi = d.at("exhi").get<double>();
  }
  p.validate();
  return p;
}

nlohmann::ordered_json to_json(const DiffusionModel& m) {
  nlohmann::ordered_json j;
  j["recoil_scale"] = m.recoil_scale;
  j["dimensional_projection"] = m.dimensional_projection;
  j["calibration_gain"] = m.calibration_gain;
  return j;
}

DiffusionModel diffusion_model_from_json(const nlohmann::json& j) {
  require_known_keys(j, {"recoil_scale", "dimensional_projection", "calibration_gain"},
                     "diffusion_model");
  DiffusionModel m;
  m.recoil_scale = j.at("recoil_scale").get<double>();
  m.dimensional_projection = j.at("dimensional_projection").get<double>();
  m.calibration_gain = j.at("calibration_gain").get<double>();
  if (m.recoil_scale < 0 || m.dimensional_projection < 0 || m.calibration_gain < 0) {
    throw std::invalid_argument("diffusion model fields must be >= 0");
  }
  return m;
}

}  // namespace cqed
