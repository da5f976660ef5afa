#include "promptbench/chat_client.hpp"

#include "promptbench/error.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>

namespace promptbench {

using nlohmann::json;

std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::InvalidConfig, fmt::format("\"{}\" is not an absolute URL", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

ChatCompletionsClient::ChatCompletionsClient(ChatClientOptions options) : options_(std::move(options)) {
  std::tie(origin_, path_prefix_) = split_base_url(options_.base_url);
}

std::string ChatCompletionsClient::request_body(const CompletionRequest& request) {
  json body = {
      {"model", request.model_id},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
      {"n", request.variants},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  return body.dump();
}

std::vector<std::string> ChatCompletionsClient::parse_response(const std::string& body, int expected_variants) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::BackendRejected, fmt::format("unparseable completion response: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array()) {
    throw Error(Errc::BackendRejected, "completion response has no choices");
  }
  std::vector<std::pair<int, std::string>> indexed;
  int position = 0;
  for (const auto& choice : doc["choices"]) {
    const int index = choice.contains("index") && choice["index"].is_number_integer()
                          ? choice["index"].get<int>()
                          : position;
    ++position;
    const auto* content = choice.contains("message") && choice["message"].is_object() &&
                                  choice["message"].contains("content") && choice["message"]["content"].is_string()
                              ? &choice["message"]["content"]
                              : nullptr;
    if (content == nullptr) throw Error(Errc::BackendRejected, "choice without message content");
    indexed.emplace_back(index, content->get<std::string>());
  }
  std::stable_sort(indexed.begin(), indexed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (static_cast<int>(indexed.size()) != expected_variants) {
    throw Error(Errc::BackendRejected,
                fmt::format("expected {} choices, got {}", expected_variants, indexed.size()));
  }
  std::vector<std::string> out;
  for (auto& [_, text] : indexed) out.push_back(std::move(text));
  return out;
}

std::vector<std::string> ChatCompletionsClient::complete(const CompletionRequest& request) {
  httplib::Client client(origin_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  if (!options_.api_key.empty()) client.set_bearer_token_auth(options_.api_key);

  auto res = client.Post(path_prefix_ + "/v1/chat/completions", request_body(request), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
      throw Error(Errc::BackendTimeout,
                  fmt::format("no completion within {} ms ({})", request.timeout.count(), httplib::to_string(err)));
    }
    throw Error(Errc::BackendRejected, fmt::format("completion request failed: {}", httplib::to_string(err)));
  }
  if (res->status == 429) {
    throw Error(Errc::QuotaExceeded, fmt::format("backend quota exceeded: {}", res->body));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::BackendRejected, fmt::format("backend returned HTTP {}: {}", res->status, res->body));
  }
  return parse_response(res->body, request.variants);
}

} // namespace promptbench
