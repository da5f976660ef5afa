#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace promptbench {

enum class ScaffoldKind { program, function };

// Immutable lead-in of the student's prompt, e.g. "Write a Python program that".
struct PromptScaffold {
  ScaffoldKind kind = ScaffoldKind::program;
  std::string prefix;

  bool operator==(const PromptScaffold&) const = default;
};

enum class TestKind { stdio, function_call };

// Tests are never shown until they fail.
enum class Visibility { hidden_until_failed };

struct FunctionCall {
  std::string name;
  std::vector<nlohmann::json> args;

  bool operator==(const FunctionCall&) const = default;
};

struct TestCase {
  std::size_t index = 0;
  TestKind kind = TestKind::stdio;
  std::string stdin_text;          // stdio tests
  FunctionCall call;               // function_call tests
  std::string expected_output;     // already normalized
  Visibility visibility = Visibility::hidden_until_failed;

  bool operator==(const TestCase&) const = default;
};

struct FilterPolicy {
  std::vector<std::string> disallowed;
  std::vector<std::string> allowed_hint;
  int max_regenerations = 2;

  bool operator==(const FilterPolicy&) const = default;
};

struct PromptProblem {
  std::string id;
  std::string title;
  std::vector<std::string> assets;       // file names under asset_dir
  std::filesystem::path asset_dir;
  PromptScaffold scaffold;
  std::vector<TestCase> tests;
  FilterPolicy filter;
  std::string exercise_language = "python";

  bool operator==(const PromptProblem&) const = default;
};

struct Course {
  std::string id;
  std::string title;
  std::vector<PromptProblem> problems;   // manifest order

  bool operator==(const Course&) const = default;
};

std::string_view to_string(ScaffoldKind kind) noexcept;
std::string_view to_string(TestKind kind) noexcept;

// Display name used inside prompts ("Python" for "python").
std::string language_display_name(const std::string& exercise_language);

} // namespace promptbench
