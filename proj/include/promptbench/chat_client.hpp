#pragma once

#include "promptbench/promptpipeline.hpp"

#include <string>

namespace promptbench {

struct ChatClientOptions {
  std::string base_url;   // e.g. https://api.openai.com
  std::string api_key;    // sent as a bearer token when non-empty
};

// OpenAI-style chat-completions backend:
//   POST {base_url}/v1/chat/completions
//   {"model", "temperature", "max_tokens", "n", "messages": [{"role": "user", "content"}]}
// Completions are read from choices[i].message.content.
class ChatCompletionsClient final : public CompletionBackend {
public:
  explicit ChatCompletionsClient(ChatClientOptions options);

  std::vector<std::string> complete(const CompletionRequest& request) override;

  // Exposed for tests.
  static std::string request_body(const CompletionRequest& request);
  static std::vector<std::string> parse_response(const std::string& body, int expected_variants);

private:
  ChatClientOptions options_;
  std::string origin_;      // scheme://host[:port]
  std::string path_prefix_; // anything after the origin, without trailing '/'
};

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url);

} // namespace promptbench
