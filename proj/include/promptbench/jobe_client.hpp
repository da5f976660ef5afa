#pragma once

#include "promptbench/sandbox.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace promptbench {

inline constexpr const char* kJobeRunsPath = "/jobe/index.php/restapi/runs";

// Client for a Jobe-compatible sandbox (JobeInABox or the bundled stub).
class JobeClient final : public SandboxClient {
public:
  // base_url: scheme://host[:port][/prefix]
  explicit JobeClient(std::string base_url);

  RunResult run(const RunSpec& spec) override;

  static nlohmann::json request_body(const RunSpec& spec);
  // Throws Error{SandboxProtocolError}.
  static RunResult parse_response(const std::string& body);

private:
  std::string origin_;
  std::string path_prefix_;
};

} // namespace promptbench
