#pragma once

// JSON forms of the physical parameter blocks. Readers are strict: unknown
// keys are rejected and missing keys keep their defaults.

#include "cqed/field_maps.hpp"
#include "cqed/qjc_core.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace cqed {

/// Throws std::invalid_argument naming the first key of `object` (under
/// `context`) that is not in `allowed`, or if `object` is not an object.
void require_known_keys(const nlohmann::json& object, std::initializer_list<const char*> allowed,
                        const std::string& context);

nlohmann::ordered_json to_json(const SystemParams& params);
SystemParams system_params_from_json(const nlohmann::json& j, SystemParams base = {});

nlohmann::ordered_json to_json(const DiffusionModel& model);
DiffusionModel diffusion_model_from_json(const nlohmann::json& j);

}  // namespace cqed
