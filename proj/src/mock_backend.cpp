#include "promptbench/mock_backend.hpp"

#include "promptbench/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace promptbench {

MockBackend::MockBackend(std::map<std::string, std::vector<std::string>> table) : table_(std::move(table)) {}

MockBackend MockBackend::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidConfig, fmt::format("cannot read mock table {}", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidConfig, fmt::format("{}: {}", path.string(), e.what()));
  }
  MockBackend backend;
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw Error(Errc::InvalidConfig, path.string() + ": missing \"entries\" list");
  }
  for (const auto& entry : doc["entries"]) {
    try {
      backend.add(entry.at("prompt").get<std::string>(), entry.at("responses").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidConfig, fmt::format("{}: bad entry: {}", path.string(), e.what()));
    }
  }
  return backend;
}

void MockBackend::add(std::string rendered_prompt, std::vector<std::string> script) {
  if (script.empty()) throw Error(Errc::InvalidConfig, "mock script needs at least one response");
  table_[std::move(rendered_prompt)] = std::move(script);
}

std::vector<std::string> MockBackend::complete(const CompletionRequest& request) {
  ++calls_;
  const auto it = table_.find(request.prompt);
  if (it == table_.end()) {
    throw Error(Errc::BackendRejected, "mock backend has no completion for this prompt");
  }
  const auto& script = it->second;
  std::vector<std::string> out;
  for (int v = 0; v < request.variants; ++v) {
    const auto k = static_cast<std::size_t>(request.generation) * static_cast<std::size_t>(request.variants) +
                   static_cast<std::size_t>(v);
    out.push_back(script[std::min(k, script.size() - 1)]);
  }
  return out;
}

} // namespace promptbench
