#pragma once

#include "promptbench/promptpipeline.hpp"
#include "promptbench/sandbox.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace promptbench {

enum class BackendKind { mock, http };

struct BackendSettings {
  BackendKind kind = BackendKind::mock;
  std::filesystem::path mock_table;
  std::string base_url = "https://api.openai.com";
  std::string api_key;
};

// Server configuration, read from a JSON file (see config/example.json).
// Relative paths are resolved against the file's directory.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::filesystem::path> bundles;
  std::filesystem::path log_path = "submissions.jsonl";
  std::optional<std::filesystem::path> static_dir;
  BackendSettings backend;
  GenerationConfig generation;
  RunLimits limits;
  std::size_t backend_in_flight = 8;
  std::string sandbox_url = "http://127.0.0.1:4000";
  // Bearer token for analytics and reload; empty leaves them open.
  std::string admin_token;
};

// Throws Error{InvalidConfig}.
ServiceConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ServiceConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

// PROMPTBENCH_LLM_KEY, PROMPTBENCH_LLM_BASE_URL (switches to the HTTP
// backend), PROMPTBENCH_LLM_MODEL and PROMPTBENCH_SANDBOX_URL override the
// file.
void apply_env_overrides(ServiceConfig& config, const EnvLookup& lookup);
std::optional<std::string> process_env(const char* name);

} // namespace promptbench
