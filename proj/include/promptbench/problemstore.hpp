#pragma once

#include "promptbench/problem.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace promptbench {

// Loads a course bundle:
//
//   course.json                 {"id", "title", "problems": [ids...]}
//   <id>/problem.json           title, scaffold, assets, filter
//   <id>/tests.json             stdio or function_call tests
//   <id>/assets/*               images and animations
//
// Throws Error with MissingManifest, MalformedBundle, DuplicateProblemId,
// MissingTests, AssetNotFound, MalformedTest or InvalidProblem.
Course load_bundle(const std::filesystem::path& root);

// Throws Error{UnknownProblem}.
const PromptProblem& get_problem(const Course& course, const std::string& problem_id);

struct Neighbors {
  std::optional<std::string> previous;
  std::optional<std::string> next;
};

Neighbors neighbors(const Course& course, const std::string& problem_id);

// tests.json entry codec. Parsing normalizes "expected".
nlohmann::json test_case_to_json(const TestCase& test);
TestCase test_case_from_json(const nlohmann::json& entry, std::size_t index);

// How a test is shown to a student once it fails: the stdin text, or the
// call expression for function tests.
std::string describe_test_input(const TestCase& test);

// Immutable set of loaded courses, swapped atomically on reload.
class CourseCatalog {
public:
  using Snapshot = std::shared_ptr<const std::vector<Course>>;

  explicit CourseCatalog(std::vector<std::filesystem::path> bundle_roots);
  CourseCatalog(std::vector<std::filesystem::path> bundle_roots, std::vector<Course> courses);

  // Re-reads every bundle; the old snapshot stays live if any bundle fails.
  void reload();

  [[nodiscard]] Snapshot snapshot() const;

  // Throws Error{UnknownCourse}.
  static const Course& find_course(const std::vector<Course>& courses, const std::string& course_id);

private:
  static std::vector<Course> load_all(const std::vector<std::filesystem::path>& roots);

  std::vector<std::filesystem::path> roots_;
  mutable std::mutex mutex_;
  Snapshot snapshot_;
};

} // namespace promptbench
