#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace tslab::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

struct RunConfig {
    std::string command;  // density | simulate | mc-table | fit | forecast
    std::uint64_t seed = 12345;
    std::string output_dir = ".";
    unsigned workers = 0;  // 0 = all cores
    nlohmann::json params = nlohmann::json::object();
};

RunConfig parse_config_json(const nlohmann::json& j);

// Executes the named pipeline, writes artifacts atomically into output_dir,
// and drops a manifest next to them. Returns the artifact paths (manifest
// last). Throws ConfigError/DataError/Error; main maps those to exit codes.
std::vector<std::string> run(const RunConfig& config);

// FNV-1a 64-bit over the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

}  // namespace tslab::cli
