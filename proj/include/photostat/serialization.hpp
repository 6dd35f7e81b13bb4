#pragma once

#include <json.hpp>
#include <string>

#include "photostat/simulator.hpp"
#include "photostat/types.hpp"

namespace photostat {

nlohmann::ordered_json to_json(const EmitterSpec& e);
nlohmann::ordered_json to_json(const ExcitationSchedule& s);
nlohmann::ordered_json to_json(const DetectionChain& c);
nlohmann::ordered_json to_json(const CavityCoupling& c);
nlohmann::ordered_json to_json(const SimConfig& c);

std::string to_string(InterferometerMode m);
std::string to_string(InterferenceSampler s);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace photostat
