#pragma once

#include <json.hpp>

#include "sgps/models.hpp"
#include "sgps/sampler.hpp"
#include "sgps/synth.hpp"

namespace sgps {

// JSON forms of the configuration structs. Missing keys keep their defaults.

nlohmann::json to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const nlohmann::json& j, ScenarioConfig base = {});

nlohmann::json to_json(const SamplerConfig& c);
SamplerConfig sampler_from_json(const nlohmann::json& j, SamplerConfig base = {});

nlohmann::json to_json(const GpsOptions& o);
GpsOptions gps_options_from_json(const nlohmann::json& j, GpsOptions base = {});

nlohmann::json to_json(const BSplineBasis<double>& basis);

/// FNV-1a 64-bit hash of a string, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace sgps
