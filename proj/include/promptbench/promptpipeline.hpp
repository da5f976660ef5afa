#pragma once

#include "promptbench/codefilter.hpp"
#include "promptbench/problem.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace promptbench {

// "{language}" is replaced by the exercise language's display name.
inline constexpr std::string_view kGuidancePreambleTemplate =
    "You are a code generator. Respond with a single complete {language} program only. "
    "Output no explanations, no comments, and no text outside one fenced code block.";

std::string guidance_preamble(const std::string& exercise_language);

struct FullPrompt {
  std::string guidance_preamble;
  std::string scaffold_prefix;
  std::string student_text;
  std::optional<std::string> allowed_constructs_clause;

  // preamble, blank line, prefix, one space, student text verbatim; the
  // allowed-constructs clause follows after another blank line.
  [[nodiscard]] std::string render() const;

  bool operator==(const FullPrompt&) const = default;
};

// Throws Error{EmptyPrompt} when student_text is blank.
FullPrompt compose_prompt(const PromptScaffold& scaffold, const std::string& student_text,
                          const FilterPolicy& policy, const std::string& exercise_language = "python");

struct GenerationConfig {
  std::string model_id = "gpt-3.5-turbo";
  double temperature = 0.2;
  int max_output_tokens = 1024;
  int variants_per_submission = 1;
  int request_timeout_ms = 60'000;

  // Throws Error{InvalidConfig}.
  void validate() const;
};

struct ModelResponse {
  std::string raw_text;
  std::string model_id;
  std::int64_t latency_ms = 0;
  int variant_index = 0;

  bool operator==(const ModelResponse&) const = default;
};

struct CompletionRequest {
  std::string prompt;                 // rendered
  std::string model_id;
  double temperature = 0.2;
  int max_output_tokens = 1024;
  int variants = 1;
  std::chrono::milliseconds timeout{60'000};
  int generation = 0;                 // 0 for the first request of a submission
};

// Rendered prompt in, completion texts out (one per requested variant).
class CompletionBackend {
public:
  virtual ~CompletionBackend() = default;

  // Throws Error{BackendTimeout}, Error{BackendRejected} or Error{QuotaExceeded}.
  virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;
};

// Caps the number of concurrent calls into the wrapped backend.
class BoundedBackend final : public CompletionBackend {
public:
  BoundedBackend(std::shared_ptr<CompletionBackend> inner, std::ptrdiff_t max_in_flight);

  std::vector<std::string> complete(const CompletionRequest& request) override;

private:
  std::shared_ptr<CompletionBackend> inner_;
  std::counting_semaphore<> slots_;
};

// Exactly config.variants_per_submission responses, variant_index 0..n-1.
std::vector<ModelResponse> request_completion(const FullPrompt& prompt, const GenerationConfig& config,
                                              CompletionBackend& backend, int generation = 0);

struct CheckedCode {
  ExtractedCode code;
  int accepted_variant = 0;
  int rejected_generations = 0;                  // requests with no acceptable variant
  std::vector<ModelResponse> responses;          // every generation, in request order
  std::vector<ConstructMatch> violations;        // from rejected generations
};

// Requests completions, extracts code and rejects variants that use a
// disallowed construct, re-requesting up to policy.max_regenerations times.
// Throws Error{FilterExhausted} naming the constructs when nothing passes
// (Error{NoCode} if no generation contained code at all).
CheckedCode generate_checked_code(const FullPrompt& prompt, const PromptProblem& problem,
                                  const GenerationConfig& config, CompletionBackend& backend);

} // namespace promptbench
