#include "promptbench/promptpipeline.hpp"

#include "promptbench/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <set>

namespace promptbench {

std::string guidance_preamble(const std::string& exercise_language) {
  std::string text(kGuidancePreambleTemplate);
  const std::string_view placeholder = "{language}";
  text.replace(text.find(placeholder), placeholder.size(), language_display_name(exercise_language));
  return text;
}

std::string FullPrompt::render() const {
  std::string out = guidance_preamble;
  out += "\n\n";
  out += scaffold_prefix;
  out += ' ';
  out += student_text;
  if (allowed_constructs_clause) {
    out += "\n\n";
    out += *allowed_constructs_clause;
  }
  return out;
}

FullPrompt compose_prompt(const PromptScaffold& scaffold, const std::string& student_text,
                          const FilterPolicy& policy, const std::string& exercise_language) {
  if (student_text.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
    throw Error(Errc::EmptyPrompt, "the prompt is empty");
  }
  FullPrompt prompt;
  prompt.guidance_preamble = guidance_preamble(exercise_language);
  prompt.scaffold_prefix = scaffold.prefix;
  prompt.student_text = student_text;
  if (!policy.allowed_hint.empty()) {
    prompt.allowed_constructs_clause =
        fmt::format("Use only these programming constructs: {}.", fmt::join(policy.allowed_hint, ", "));
  }
  return prompt;
}

void GenerationConfig::validate() const {
  if (model_id.empty()) throw Error(Errc::InvalidConfig, "model_id is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(Errc::InvalidConfig, fmt::format("temperature {} outside [0, 2]", temperature));
  }
  if (max_output_tokens < 1) throw Error(Errc::InvalidConfig, "max_output_tokens must be positive");
  if (variants_per_submission < 1) throw Error(Errc::InvalidConfig, "variants_per_submission must be >= 1");
  if (request_timeout_ms < 1) throw Error(Errc::InvalidConfig, "request_timeout_ms must be positive");
}

BoundedBackend::BoundedBackend(std::shared_ptr<CompletionBackend> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight) {}

std::vector<std::string> BoundedBackend::complete(const CompletionRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->complete(request);
}

std::vector<ModelResponse> request_completion(const FullPrompt& prompt, const GenerationConfig& config,
                                              CompletionBackend& backend, int generation) {
  config.validate();
  CompletionRequest request;
  request.prompt = prompt.render();
  request.model_id = config.model_id;
  request.temperature = config.temperature;
  request.max_output_tokens = config.max_output_tokens;
  request.variants = config.variants_per_submission;
  request.timeout = std::chrono::milliseconds(config.request_timeout_ms);
  request.generation = generation;

  const auto started = std::chrono::steady_clock::now();
  auto texts = backend.complete(request);
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started).count();

  if (texts.size() != static_cast<std::size_t>(config.variants_per_submission)) {
    throw Error(Errc::BackendRejected, fmt::format("backend returned {} completions, expected {}",
                                                   texts.size(), config.variants_per_submission));
  }
  std::vector<ModelResponse> responses;
  responses.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    ModelResponse response{std::move(texts[i]), config.model_id, latency, static_cast<int>(i)};
    spdlog::info("completion model={} generation={} variant={} latency_ms={} bytes={}", response.model_id,
                 generation, response.variant_index, response.latency_ms, response.raw_text.size());
    responses.push_back(std::move(response));
  }
  return responses;
}

CheckedCode generate_checked_code(const FullPrompt& prompt, const PromptProblem& problem,
                                  const GenerationConfig& config, CompletionBackend& backend) {
  CheckedCode result;
  const auto& policy = problem.filter;
  bool saw_code = false;

  for (int generation = 0; generation <= policy.max_regenerations; ++generation) {
    auto responses = request_completion(prompt, config, backend, generation);
    std::optional<std::pair<ExtractedCode, int>> accepted;
    for (const auto& response : responses) {
      if (accepted) break;
      ExtractedCode code;
      try {
        code = extract_code(response.raw_text);
      } catch (const Error& e) {
        if (e.code() != Errc::NoCode) throw;
        continue;
      }
      saw_code = true;
      auto matches = detect_constructs(code.source, policy.disallowed);
      if (matches.empty()) {
        accepted.emplace(std::move(code), response.variant_index);
      } else {
        result.violations.insert(result.violations.end(), matches.begin(), matches.end());
      }
    }
    result.responses.insert(result.responses.end(), responses.begin(), responses.end());
    if (accepted) {
      result.code = std::move(accepted->first);
      result.accepted_variant = accepted->second;
      return result;
    }
    ++result.rejected_generations;
  }

  if (!saw_code) throw Error(Errc::NoCode, "the model did not return any code");
  std::set<std::string> names;
  for (const auto& m : result.violations) names.insert(m.construct);
  throw Error(Errc::FilterExhausted,
              fmt::format("every generated program used a disallowed construct: {}", fmt::join(names, ", ")));
}

} // namespace promptbench
