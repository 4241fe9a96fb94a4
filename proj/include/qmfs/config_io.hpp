#pragma once

// JSON configuration files. Frequencies and rates appear as "*_hz" fields
// holding f = omega/2pi; phases are in radians.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qmfs/model.hpp"

namespace qmfs {

inline constexpr int config_schema_version = 1;

nlohmann::ordered_json config_to_json(const SystemConfig& config);
/// Throws ConfigError with the JSON path of the offending field.
SystemConfig config_from_json(const nlohmann::ordered_json& doc);

/// Canonical text form: two-space indent, trailing newline.
std::string serialize_config(const SystemConfig& config);
SystemConfig parse_config(const std::string& text);
SystemConfig load_config(const std::filesystem::path& path);

} // namespace qmfs
