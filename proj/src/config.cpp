#include "promptbench/config.hpp"

#include "promptbench/error.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>

namespace promptbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
void read_field(const json& obj, const char* key, T& target) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, fmt::format("config field \"{}\": {}", key, e.what()));
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw Error(Errc::InvalidConfig, fmt::format("config \"{}\" must be an object", key));
  return doc.at(key);
}

} // namespace

ServiceConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  ServiceConfig config;

  const auto& listen = section(doc, "listen");
  read_field(listen, "host", config.host);
  read_field(listen, "port", config.port);

  std::vector<std::string> bundles;
  read_field(doc, "bundles", bundles);
  for (const auto& b : bundles) config.bundles.push_back(resolve(base_dir, b));
  if (config.bundles.empty()) throw Error(Errc::InvalidConfig, "config lists no bundles");

  std::string log_path = "submissions.jsonl";
  read_field(doc, "log_path", log_path);
  config.log_path = resolve(base_dir, log_path);
  if (doc.contains("static_dir")) {
    std::string dir;
    read_field(doc, "static_dir", dir);
    config.static_dir = resolve(base_dir, dir);
  }

  const auto& backend = section(doc, "backend");
  std::string kind = "mock";
  read_field(backend, "kind", kind);
  if (kind == "mock") {
    config.backend.kind = BackendKind::mock;
    std::string table;
    read_field(backend, "mock_table", table);
    if (table.empty()) throw Error(Errc::InvalidConfig, "mock backend needs \"mock_table\"");
    config.backend.mock_table = resolve(base_dir, table);
  } else if (kind == "http") {
    config.backend.kind = BackendKind::http;
    read_field(backend, "base_url", config.backend.base_url);
  } else {
    throw Error(Errc::InvalidConfig, fmt::format("unknown backend kind \"{}\"", kind));
  }

  const auto& gen = section(doc, "generation");
  read_field(gen, "model_id", config.generation.model_id);
  read_field(gen, "temperature", config.generation.temperature);
  read_field(gen, "max_output_tokens", config.generation.max_output_tokens);
  read_field(gen, "variants_per_submission", config.generation.variants_per_submission);
  read_field(gen, "request_timeout_ms", config.generation.request_timeout_ms);

  const auto& limits = section(doc, "limits");
  read_field(limits, "backend_in_flight", config.backend_in_flight);
  read_field(limits, "sandbox_concurrency", config.limits.max_concurrent_runs);
  read_field(limits, "cpu_time_limit_s", config.limits.cpu_time_limit_s);
  read_field(limits, "memory_limit_mb", config.limits.memory_limit_mb);

  read_field(doc, "sandbox_url", config.sandbox_url);
  read_field(doc, "admin_token", config.admin_token);

  config.generation.validate();
  if (config.backend_in_flight < 1 || config.limits.max_concurrent_runs < 1 || config.limits.cpu_time_limit_s < 1 ||
      config.limits.memory_limit_mb < 1) {
    throw Error(Errc::InvalidConfig, "limits must be positive");
  }
  return config;
}

ServiceConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidConfig, fmt::format("cannot read config {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

void apply_env_overrides(ServiceConfig& config, const EnvLookup& lookup) {
  if (auto key = lookup("PROMPTBENCH_LLM_KEY")) config.backend.api_key = *key;
  if (auto url = lookup("PROMPTBENCH_LLM_BASE_URL")) {
    config.backend.kind = BackendKind::http;
    config.backend.base_url = *url;
  }
  if (auto model = lookup("PROMPTBENCH_LLM_MODEL")) config.generation.model_id = *model;
  if (auto sandbox = lookup("PROMPTBENCH_SANDBOX_URL")) config.sandbox_url = *sandbox;
}

std::optional<std::string> process_env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

} // namespace promptbench
