#include "promptbench/jobe_client.hpp"

#include "promptbench/chat_client.hpp"
#include "promptbench/error.hpp"

#include <fmt/format.h>
#include <httplib.h>

namespace promptbench {

using nlohmann::json;

JobeClient::JobeClient(std::string base_url) {
  std::tie(origin_, path_prefix_) = split_base_url(base_url);
}

json JobeClient::request_body(const RunSpec& spec) {
  return {{"run_spec",
           {{"language_id", spec.language_id},
            {"sourcecode", spec.source},
            {"input", spec.stdin_text},
            {"parameters", {{"cputime", spec.cpu_time_limit_s}, {"memorylimit", spec.memory_limit_mb}}}}}};
}

RunResult JobeClient::parse_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SandboxProtocolError, fmt::format("sandbox sent invalid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("outcome") || !doc["outcome"].is_number_integer()) {
    throw Error(Errc::SandboxProtocolError, "sandbox response has no integer \"outcome\"");
  }
  auto text = [&](const char* key) -> std::string {
    if (!doc.contains(key) || doc[key].is_null()) return {};
    if (!doc[key].is_string()) {
      throw Error(Errc::SandboxProtocolError, fmt::format("sandbox field \"{}\" is not a string", key));
    }
    return doc[key].get<std::string>();
  };
  RunResult result;
  result.outcome_class = outcome_from_jobe(doc["outcome"].get<int>());
  result.stdout_text = text("stdout");
  result.stderr_text = text("stderr");
  const auto cmpinfo = text("cmpinfo");
  switch (result.outcome_class) {
    case OutcomeClass::ok: result.exit_code = 0; break;
    case OutcomeClass::compile_error:
      if (result.stderr_text.empty()) result.stderr_text = cmpinfo;
      result.exit_code = 1;
      break;
    case OutcomeClass::runtime_error: result.exit_code = 1; break;
    case OutcomeClass::time_limit: result.exit_code = 124; break;
    case OutcomeClass::sandbox_error: result.exit_code = -1; break;
  }
  return result;
}

RunResult JobeClient::run(const RunSpec& spec) {
  httplib::Client client(origin_);
  client.set_connection_timeout(5, 0);
  // Wall time for the run plus queueing slack.
  client.set_read_timeout(spec.cpu_time_limit_s * 3 + 30, 0);
  auto res = client.Post(path_prefix_ + kJobeRunsPath, request_body(spec).dump(), "application/json");
  if (!res) {
    throw Error(Errc::SandboxUnreachable,
                fmt::format("sandbox at {} unreachable: {}", origin_, httplib::to_string(res.error())));
  }
  if (res->status < 200 || res->status >= 300) {
    RunResult failed;
    failed.outcome_class = OutcomeClass::sandbox_error;
    failed.stderr_text = fmt::format("sandbox returned HTTP {}: {}", res->status, res->body);
    return failed;
  }
  return parse_response(res->body);
}

} // namespace promptbench
