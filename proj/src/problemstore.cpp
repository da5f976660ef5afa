#include "promptbench/problemstore.hpp"

#include "promptbench/error.hpp"
#include "promptbench/literal.hpp"
#include "promptbench/sandbox.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace promptbench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ScaffoldKind kind) noexcept {
  return kind == ScaffoldKind::program ? "program" : "function";
}

std::string_view to_string(TestKind kind) noexcept {
  return kind == TestKind::stdio ? "stdio" : "function_call";
}

std::string language_display_name(const std::string& exercise_language) {
  if (exercise_language == "python" || exercise_language == "python3") return "Python";
  std::string name = exercise_language;
  if (!name.empty()) name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  return name;
}

namespace {

json read_json_file(const fs::path& path, Errc missing_code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(missing_code, fmt::format("cannot read {}", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(missing_code == Errc::MissingTests ? Errc::MalformedTest : Errc::MalformedBundle,
                fmt::format("{}: {}", path.string(), e.what()));
  }
}

bool is_slug(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

bool is_identifier(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

std::string require_string(const json& obj, const char* key, Errc code, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) {
    throw Error(code, fmt::format("{}: missing string field \"{}\"", where, key));
  }
  return obj.at(key).get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  const auto& arr = obj.at(key);
  if (!arr.is_array()) throw Error(Errc::MalformedBundle, fmt::format("{}: \"{}\" must be a list", where, key));
  for (const auto& item : arr) {
    if (!item.is_string()) {
      throw Error(Errc::MalformedBundle, fmt::format("{}: \"{}\" entries must be strings", where, key));
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

bool is_visual_asset(const fs::path& name) {
  std::string ext = name.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".gif" || ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".webp";
}

FilterPolicy parse_filter(const json& problem, const std::string& where) {
  FilterPolicy policy;
  if (!problem.contains("filter")) return policy;
  const auto& f = problem.at("filter");
  if (!f.is_object()) throw Error(Errc::MalformedBundle, where + ": \"filter\" must be an object");
  policy.disallowed = string_list(f, "disallowed", where);
  policy.allowed_hint = string_list(f, "allowed_hint", where);
  if (f.contains("max_regenerations")) {
    const auto& m = f.at("max_regenerations");
    if (!m.is_number_integer() || m.get<int>() < 0 || m.get<int>() > 20) {
      throw Error(Errc::MalformedBundle, where + ": max_regenerations must be an integer in [0, 20]");
    }
    policy.max_regenerations = m.get<int>();
  }
  for (const auto& name : policy.disallowed) {
    if (std::find(policy.allowed_hint.begin(), policy.allowed_hint.end(), name) != policy.allowed_hint.end()) {
      throw Error(Errc::InvalidProblem,
                  fmt::format("{}: construct \"{}\" is both allowed and disallowed", where, name));
    }
  }
  return policy;
}

PromptProblem load_problem(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  const std::string where = (dir / "problem.json").string();
  const json doc = read_json_file(dir / "problem.json", Errc::MalformedBundle);

  PromptProblem problem;
  problem.id = id;
  problem.title = require_string(doc, "title", Errc::MalformedBundle, where);
  if (doc.contains("language")) problem.exercise_language = require_string(doc, "language", Errc::MalformedBundle, where);

  if (!doc.contains("scaffold") || !doc.at("scaffold").is_object()) {
    throw Error(Errc::MalformedBundle, where + ": missing \"scaffold\"");
  }
  const auto& scaffold = doc.at("scaffold");
  const std::string kind = require_string(scaffold, "kind", Errc::MalformedBundle, where);
  if (kind == "program") {
    problem.scaffold.kind = ScaffoldKind::program;
  } else if (kind == "function") {
    problem.scaffold.kind = ScaffoldKind::function;
  } else {
    throw Error(Errc::MalformedBundle, fmt::format("{}: unknown scaffold kind \"{}\"", where, kind));
  }
  problem.scaffold.prefix = require_string(scaffold, "prefix", Errc::MalformedBundle, where);
  if (problem.scaffold.prefix.empty()) throw Error(Errc::InvalidProblem, where + ": empty scaffold prefix");

  problem.asset_dir = dir / "assets";
  problem.assets = string_list(doc, "assets", where);
  if (problem.assets.empty()) throw Error(Errc::InvalidProblem, where + ": at least one visual asset is required");
  for (const auto& asset : problem.assets) {
    const fs::path name(asset);
    if (name.has_parent_path() || name.filename() != name || !is_visual_asset(name)) {
      throw Error(Errc::InvalidProblem, fmt::format("{}: \"{}\" is not an image or animation file name", where, asset));
    }
    if (!fs::is_regular_file(problem.asset_dir / name)) {
      throw Error(Errc::AssetNotFound, fmt::format("{}: asset {} not found", where, (problem.asset_dir / name).string()));
    }
  }

  problem.filter = parse_filter(doc, where);

  const fs::path tests_path = dir / "tests.json";
  if (!fs::exists(tests_path)) throw Error(Errc::MissingTests, fmt::format("{}: no tests.json", dir.string()));
  const json tests = read_json_file(tests_path, Errc::MissingTests);
  if (!tests.is_array()) throw Error(Errc::MalformedTest, tests_path.string() + ": expected a list of tests");
  if (tests.empty()) throw Error(Errc::MissingTests, tests_path.string() + ": no test cases");
  for (std::size_t i = 0; i < tests.size(); ++i) {
    try {
      problem.tests.push_back(test_case_from_json(tests[i], i));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("{}: {}", tests_path.string(), e.what()));
    }
  }
  return problem;
}

} // namespace

TestCase test_case_from_json(const json& entry, std::size_t index) {
  const std::string where = fmt::format("test {}", index);
  if (!entry.is_object()) throw Error(Errc::MalformedTest, where + ": expected an object");
  TestCase test;
  test.index = index;
  const std::string kind = require_string(entry, "kind", Errc::MalformedTest, where);
  if (kind == "stdio") {
    test.kind = TestKind::stdio;
    test.stdin_text = require_string(entry, "stdin", Errc::MalformedTest, where);
  } else if (kind == "function_call") {
    test.kind = TestKind::function_call;
    if (!entry.contains("call") || !entry.at("call").is_object()) {
      throw Error(Errc::MalformedTest, where + ": missing \"call\"");
    }
    const auto& call = entry.at("call");
    test.call.name = require_string(call, "name", Errc::MalformedTest, where);
    if (!is_identifier(test.call.name)) {
      throw Error(Errc::MalformedTest, fmt::format("{}: \"{}\" is not a function name", where, test.call.name));
    }
    if (!call.contains("args") || !call.at("args").is_array()) {
      throw Error(Errc::MalformedTest, where + ": \"args\" must be a list");
    }
    for (const auto& arg : call.at("args")) {
      if (!is_restricted_literal(arg)) {
        throw Error(Errc::MalformedTest, fmt::format("{}: argument {} is not a number, string, boolean or list", where, arg.dump()));
      }
      test.call.args.push_back(arg);
    }
  } else {
    throw Error(Errc::MalformedTest, fmt::format("{}: unknown kind \"{}\"", where, kind));
  }
  test.expected_output = normalize_output(require_string(entry, "expected", Errc::MalformedTest, where));
  return test;
}

json test_case_to_json(const TestCase& test) {
  json out = {{"kind", std::string(to_string(test.kind))}};
  if (test.kind == TestKind::stdio) {
    out["stdin"] = test.stdin_text;
  } else {
    out["call"] = {{"name", test.call.name}, {"args", test.call.args}};
  }
  out["expected"] = test.expected_output;
  return out;
}

std::string describe_test_input(const TestCase& test) {
  return test.kind == TestKind::stdio ? test.stdin_text : render_call(test.call);
}

Course load_bundle(const fs::path& root) {
  const fs::path manifest = root / "course.json";
  if (!fs::is_regular_file(manifest)) {
    throw Error(Errc::MissingManifest, fmt::format("no course.json in {}", root.string()));
  }
  const json doc = read_json_file(manifest, Errc::MissingManifest);
  const std::string where = manifest.string();

  Course course;
  course.id = require_string(doc, "id", Errc::MalformedBundle, where);
  course.title = require_string(doc, "title", Errc::MalformedBundle, where);
  if (!is_slug(course.id)) throw Error(Errc::MalformedBundle, fmt::format("{}: bad course id \"{}\"", where, course.id));

  const auto ids = string_list(doc, "problems", where);
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!is_slug(id)) throw Error(Errc::MalformedBundle, fmt::format("{}: bad problem id \"{}\"", where, id));
    if (!seen.insert(id).second) {
      throw Error(Errc::DuplicateProblemId, fmt::format("{}: problem \"{}\" listed twice", where, id));
    }
  }
  for (const auto& id : ids) course.problems.push_back(load_problem(root, id));
  return course;
}

const PromptProblem& get_problem(const Course& course, const std::string& problem_id) {
  for (const auto& problem : course.problems) {
    if (problem.id == problem_id) return problem;
  }
  throw Error(Errc::UnknownProblem, fmt::format("no problem \"{}\" in course \"{}\"", problem_id, course.id));
}

Neighbors neighbors(const Course& course, const std::string& problem_id) {
  const auto& problems = course.problems;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (problems[i].id != problem_id) continue;
    Neighbors n;
    if (i > 0) n.previous = problems[i - 1].id;
    if (i + 1 < problems.size()) n.next = problems[i + 1].id;
    return n;
  }
  throw Error(Errc::UnknownProblem, fmt::format("no problem \"{}\" in course \"{}\"", problem_id, course.id));
}

CourseCatalog::CourseCatalog(std::vector<fs::path> bundle_roots)
    : roots_(std::move(bundle_roots)),
      snapshot_(std::make_shared<const std::vector<Course>>(load_all(roots_))) {}

CourseCatalog::CourseCatalog(std::vector<fs::path> bundle_roots, std::vector<Course> courses)
    : roots_(std::move(bundle_roots)),
      snapshot_(std::make_shared<const std::vector<Course>>(std::move(courses))) {}

std::vector<Course> CourseCatalog::load_all(const std::vector<fs::path>& roots) {
  std::vector<Course> courses;
  std::set<std::string> ids;
  for (const auto& root : roots) {
    courses.push_back(load_bundle(root));
    if (!ids.insert(courses.back().id).second) {
      throw Error(Errc::MalformedBundle, fmt::format("course id \"{}\" loaded twice", courses.back().id));
    }
  }
  return courses;
}

void CourseCatalog::reload() {
  auto fresh = std::make_shared<const std::vector<Course>>(load_all(roots_));
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(fresh);
}

CourseCatalog::Snapshot CourseCatalog::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

const Course& CourseCatalog::find_course(const std::vector<Course>& courses, const std::string& course_id) {
  for (const auto& course : courses) {
    if (course.id == course_id) return course;
  }
  throw Error(Errc::UnknownCourse, fmt::format("no course \"{}\"", course_id));
}

} // namespace promptbench
