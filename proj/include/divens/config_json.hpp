#pragma once

// JSON (de)serialization of configuration structs. Missing keys keep their
// defaults; unknown keys are rejected so typos do not pass silently.

#include <json.hpp>

#include "divens/mlp.hpp"
#include "divens/synth.hpp"

namespace divens {

void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

}  // namespace divens
