#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bloomqa/evalharness.hpp"

namespace bloomqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

// Environment variables consulted by the CLI.
inline constexpr const char* kApiKeyEnv = "BLOOMQA_API_KEY";
inline constexpr const char* kEndpointEnv = "BLOOMQA_ENDPOINT";

using Environment = std::map<std::string, std::string>;

Environment process_environment();

// args excludes the program name. Never throws; errors become exit codes
// with a message on `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const Environment& env = process_environment());

// Resolves built-in defaults, then the config file, then the environment,
// then explicit flags (later layers win). Exposed for tests.
RunConfig resolve_config(const nlohmann::json& file_layer, const nlohmann::json& flag_layer, const Environment& env);

}  // namespace bloomqa::cli
