#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>

#include "photostat/efficiency.hpp"
#include "photostat/inference.hpp"

namespace photostat {

inline constexpr const char* kFitReportSchema = "photostat.fit_report/1";
inline constexpr const char* kEfficiencyReportSchema = "photostat.efficiency_report/1";

/// What produced an output file; enough to re-run the producing command.
struct Provenance {
  std::string tool = "photostat";
  std::string version;
  std::string command;
  std::string config_digest;
  std::uint64_t rng_seed = 0;
  std::map<std::string, std::string> inputs;
};

/// Library version string.
std::string version();

nlohmann::ordered_json to_json(const Provenance& p);
nlohmann::ordered_json to_json(const FitReport& r);
nlohmann::ordered_json to_json(const EfficiencyReport& r);

/// Inverse of to_json(FitReport); throws IoError naming the missing or
/// malformed field.
FitReport fit_report_from_json(const nlohmann::json& j);

/// Writes `j` pretty-printed; throws IoError.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
/// Throws IoError if unreadable or not valid JSON.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace photostat
