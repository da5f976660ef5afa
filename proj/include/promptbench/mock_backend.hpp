#pragma once

#include "promptbench/promptpipeline.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace promptbench {

// Deterministic backend keyed by the exact rendered prompt. Each entry holds
// a script of completions; the completion for (generation g, variant v) with
// n variants per request is script[g * n + v], clamped to the last entry.
// The answer therefore depends only on the prompt and the request, never on
// earlier calls.
class MockBackend final : public CompletionBackend {
public:
  MockBackend() = default;
  explicit MockBackend(std::map<std::string, std::vector<std::string>> table);
  MockBackend(MockBackend&& other) noexcept : table_(std::move(other.table_)), calls_(other.calls_.load()) {}

  // {"entries": [{"prompt": "...", "responses": ["...", ...]}, ...]}
  static MockBackend from_json_file(const std::filesystem::path& path);

  void add(std::string rendered_prompt, std::vector<std::string> script);

  // Throws Error{BackendRejected} for prompts missing from the table.
  std::vector<std::string> complete(const CompletionRequest& request) override;

  [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
  std::map<std::string, std::vector<std::string>> table_;
  std::atomic<std::size_t> calls_{0};
};

} // namespace promptbench
