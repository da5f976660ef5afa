#pragma once

#include "promptbench/problem.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptbench {

struct RunSpec {
  std::string language_id;     // sandbox language, e.g. "python3"
  std::string source;
  std::string stdin_text;
  int cpu_time_limit_s = 10;
  int memory_limit_mb = 256;
};

enum class OutcomeClass { ok, compile_error, runtime_error, time_limit, sandbox_error };

std::string_view to_string(OutcomeClass outcome) noexcept;
OutcomeClass outcome_class_from_string(std::string_view name);

struct RunResult {
  OutcomeClass outcome_class = OutcomeClass::sandbox_error;
  std::string stdout_text;
  std::string stderr_text;
  int exit_code = -1;          // 0 whenever outcome_class is ok
  // Set when the sandbox could not be reached at all (as opposed to
  // answering with an error).
  bool unreachable = false;
};

// Jobe outcome code to outcome class: 15 ok, 11 compile error,
// 12 runtime error, 13 time limit, everything else sandbox error.
OutcomeClass outcome_from_jobe(int jobe_outcome) noexcept;

class SandboxClient {
public:
  virtual ~SandboxClient() = default;

  // Throws Error{SandboxUnreachable} or Error{SandboxProtocolError}. A
  // sandbox that answers with a non-2xx status yields a sandbox_error result.
  virtual RunResult run(const RunSpec& spec) = 0;
};

struct RunLimits {
  int cpu_time_limit_s = 10;
  int memory_limit_mb = 256;
  std::size_t max_concurrent_runs = 4;
};

struct Verdict {
  std::size_t test_index = 0;
  bool passed = false;
  std::string actual;          // normalized stdout
  std::string expected;
  RunResult run;
};

struct EvaluationOutcome {
  std::vector<Verdict> verdicts;   // test-index order
  bool passed_all = false;
  std::optional<std::size_t> first_failure;

  // True when every run failed because the sandbox was unreachable.
  [[nodiscard]] bool sandbox_unreachable() const noexcept;
};

// Sandbox language id for an exercise language ("python" -> "python3").
std::string sandbox_language_id(const std::string& exercise_language);

// CRLF -> LF, trailing whitespace stripped from each line, trailing blank
// lines dropped. Nothing else changes.
std::string normalize_output(std::string_view text);

// Builds the run for one test. Function tests append a driver that prints
// the call's result. Throws Error{DriverUnrenderable}.
RunSpec build_run(const PromptProblem& problem, const TestCase& test, const std::string& source,
                  const RunLimits& limits = {});

// Python expression for a function test's call, e.g. counter([0, 1, 0]).
std::string render_call(const FunctionCall& call);

// Validates the spec and runs it. Throws Error{SandboxUnreachable} or
// Error{SandboxProtocolError}.
RunResult execute(const RunSpec& spec, SandboxClient& sandbox);

// Runs every test (no fail-fast) and reassembles verdicts in index order.
// Sandbox failures become sandbox_error verdicts.
EvaluationOutcome evaluate(const PromptProblem& problem, const std::string& source,
                           SandboxClient& sandbox, const RunLimits& limits = {});

// Lowest failing index, or nullopt when all passed.
std::optional<std::size_t> first_failing_index(const std::vector<Verdict>& verdicts);

} // namespace promptbench
