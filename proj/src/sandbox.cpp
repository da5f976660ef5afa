#include "promptbench/sandbox.hpp"

#include "promptbench/error.hpp"
#include "promptbench/literal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace promptbench {

std::string_view to_string(OutcomeClass outcome) noexcept {
  switch (outcome) {
    case OutcomeClass::ok: return "ok";
    case OutcomeClass::compile_error: return "compile_error";
    case OutcomeClass::runtime_error: return "runtime_error";
    case OutcomeClass::time_limit: return "time_limit";
    case OutcomeClass::sandbox_error: return "sandbox_error";
  }
  return "sandbox_error";
}

OutcomeClass outcome_class_from_string(std::string_view name) {
  for (auto c : {OutcomeClass::ok, OutcomeClass::compile_error, OutcomeClass::runtime_error,
                 OutcomeClass::time_limit, OutcomeClass::sandbox_error}) {
    if (to_string(c) == name) return c;
  }
  throw Error(Errc::MalformedRecord, fmt::format("unknown outcome class \"{}\"", name));
}

OutcomeClass outcome_from_jobe(int jobe_outcome) noexcept {
  switch (jobe_outcome) {
    case 15: return OutcomeClass::ok;
    case 11: return OutcomeClass::compile_error;
    case 12: return OutcomeClass::runtime_error;
    case 13: return OutcomeClass::time_limit;
    default: return OutcomeClass::sandbox_error;
  }
}

bool EvaluationOutcome::sandbox_unreachable() const noexcept {
  return !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.run.unreachable; });
}

std::string sandbox_language_id(const std::string& exercise_language) {
  if (exercise_language == "python" || exercise_language == "python3") return "python3";
  return exercise_language;
}

std::string normalize_output(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    const bool last = nl == std::string_view::npos;
    auto line = text.substr(pos, last ? std::string_view::npos : nl - pos);
    const auto end = line.find_last_not_of(" \t\r\f\v");
    line = end == std::string_view::npos ? std::string_view{} : line.substr(0, end + 1);
    out += line;
    if (last) break;
    out += '\n';
    pos = nl + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string render_call(const FunctionCall& call) {
  std::string out = call.name + "(";
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    if (i > 0) out += ", ";
    out += render_python_literal(call.args[i]);
  }
  out += ')';
  return out;
}

RunSpec build_run(const PromptProblem& problem, const TestCase& test, const std::string& source,
                  const RunLimits& limits) {
  RunSpec spec;
  spec.language_id = sandbox_language_id(problem.exercise_language);
  spec.cpu_time_limit_s = limits.cpu_time_limit_s;
  spec.memory_limit_mb = limits.memory_limit_mb;
  if (test.kind == TestKind::stdio) {
    spec.source = source;
    spec.stdin_text = test.stdin_text;
  } else {
    spec.source = source + "\n\nprint(" + render_call(test.call) + ")\n";
  }
  return spec;
}

RunResult execute(const RunSpec& spec, SandboxClient& sandbox) {
  if (spec.source.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw std::invalid_argument("run spec has no source");
  }
  if (spec.cpu_time_limit_s <= 0 || spec.memory_limit_mb <= 0) {
    throw std::invalid_argument("run limits must be positive");
  }
  auto result = sandbox.run(spec);
  if (result.outcome_class == OutcomeClass::ok) result.exit_code = 0;
  return result;
}

std::optional<std::size_t> first_failing_index(const std::vector<Verdict>& verdicts) {
  std::optional<std::size_t> first;
  for (const auto& v : verdicts) {
    if (!v.passed && (!first || v.test_index < *first)) first = v.test_index;
  }
  return first;
}

EvaluationOutcome evaluate(const PromptProblem& problem, const std::string& source, SandboxClient& sandbox,
                           const RunLimits& limits) {
  std::vector<RunSpec> specs;
  specs.reserve(problem.tests.size());
  for (const auto& test : problem.tests) specs.push_back(build_run(problem, test, source, limits));

  std::vector<RunResult> runs(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < specs.size(); i = next++) {
      try {
        runs[i] = execute(specs[i], sandbox);
      } catch (const Error& e) {
        runs[i] = RunResult{OutcomeClass::sandbox_error, "", e.what(), -1,
                            e.code() == Errc::SandboxUnreachable};
      } catch (const std::exception& e) {
        runs[i] = RunResult{OutcomeClass::sandbox_error, "", e.what(), -1, false};
      }
    }
  };
  const auto workers = std::clamp<std::size_t>(limits.max_concurrent_runs, 1, std::max<std::size_t>(specs.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  EvaluationOutcome outcome;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Verdict v;
    v.test_index = problem.tests[i].index;
    v.expected = problem.tests[i].expected_output;
    v.actual = normalize_output(runs[i].stdout_text);
    v.passed = runs[i].outcome_class == OutcomeClass::ok && v.actual == v.expected;
    v.run = std::move(runs[i]);
    outcome.verdicts.push_back(std::move(v));
  }
  outcome.first_failure = first_failing_index(outcome.verdicts);
  outcome.passed_all = !outcome.first_failure.has_value();
  return outcome;
}

} // namespace promptbench
