#include "promptbench/error.hpp"
#include "promptbench/literal.hpp"
#include "promptbench/problemstore.hpp"
#include "promptbench/sandbox.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace promptbench;
using nlohmann::json;
using testsupport::TempDir;

namespace {

Errc load_error(const std::filesystem::path& root) {
  try {
    (void)load_bundle(root);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("bundle loaded without error");
  return Errc::InvalidConfig;
}

json random_literal(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth > 0 ? 4 : 3);
  switch (kind(rng)) {
  case 0: return std::uniform_int_distribution<int>(-1000, 1000)(rng);
  case 1: return std::uniform_real_distribution<double>(-100, 100)(rng);
  case 2: {
    std::string s;
    const auto n = std::uniform_int_distribution<int>(0, 8)(rng);
    for (int i = 0; i < n; ++i) s += static_cast<char>(std::uniform_int_distribution<int>(32, 126)(rng));
    return s;
  }
  case 3: return std::bernoulli_distribution(0.5)(rng);
  default: {
    json arr = json::array();
    const auto n = std::uniform_int_distribution<int>(0, 4)(rng);
    for (int i = 0; i < n; ++i) arr.push_back(random_literal(rng, depth - 1));
    return arr;
  }
  }
}

} // namespace

TEST_CASE("bundled intro course loads in manifest order") {
  const auto course = load_bundle(testsupport::courses_dir() / "intro-python");
  CHECK(course.id == "intro-python");
  REQUIRE(course.problems.size() == 3);
  CHECK(course.problems[0].id == "hello");
  CHECK(course.problems[1].id == "ages");
  CHECK(course.problems[2].id == "judges");
  for (const auto& p : course.problems) {
    CHECK(p.scaffold.kind == ScaffoldKind::program);
    CHECK(p.scaffold.prefix == "Write a Python program that");
    CHECK_FALSE(p.assets.empty());
    CHECK_FALSE(p.tests.empty());
    for (std::size_t i = 0; i < p.tests.size(); ++i) {
      CHECK(p.tests[i].index == i);
      CHECK(normalize_output(p.tests[i].expected_output) == p.tests[i].expected_output);
    }
  }
  const auto& judges = get_problem(course, "judges");
  REQUIRE(judges.tests.size() == 3);
  CHECK(judges.tests[1].stdin_text == "8.0 9.5 7.5 6.0 9.0\n");
  CHECK(judges.tests[1].expected_output == "8.17");
}

TEST_CASE("function scaffold bundle") {
  const auto course = load_bundle(testsupport::courses_dir() / "python-functions");
  const auto& counter = get_problem(course, "counter");
  CHECK(counter.scaffold.kind == ScaffoldKind::function);
  CHECK(counter.scaffold.prefix.rfind("Write a Python function called", 0) == 0);
  REQUIRE(counter.tests.size() >= 1);
  CHECK(counter.tests[0].kind == TestKind::function_call);
  CHECK(counter.tests[0].call.name == "counter");
  CHECK(counter.tests[0].expected_output == "3");
  CHECK(counter.filter.disallowed == std::vector<std::string>{"lambda", "eval", "exec"});
}

TEST_CASE("get_problem and neighbors") {
  const auto course = load_bundle(testsupport::courses_dir() / "intro-python");
  CHECK(get_problem(course, "hello").scaffold.prefix == "Write a Python program that");
  const auto first = neighbors(course, "hello");
  CHECK_FALSE(first.previous.has_value());
  CHECK(first.next == std::optional<std::string>("ages"));
  const auto last = neighbors(course, "judges");
  CHECK(last.previous == std::optional<std::string>("ages"));
  CHECK_FALSE(last.next.has_value());
  try {
    (void)get_problem(course, "nosuch");
    FAIL("expected UnknownProblem");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownProblem);
  }
}

TEST_CASE("navigation property: next(prev(next(p))) == next(p)") {
  std::mt19937 rng(7);
  for (int round = 0; round < 20; ++round) {
    TempDir dir;
    const auto n = std::uniform_int_distribution<int>(1, 7)(rng);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
      ids.push_back("p" + std::to_string(i) + "-" + std::to_string(rng() % 1000));
      testsupport::write_problem(dir.path(), ids.back(), json::array({testsupport::stdio_test("", "x")}));
    }
    testsupport::write_manifest(dir.path(), "c", ids);
    const auto course = load_bundle(dir.path());
    for (const auto& p : course.problems) {
      const auto nx = neighbors(course, p.id).next;
      if (!nx) continue;
      const auto back = neighbors(course, *nx).previous;
      REQUIRE(back.has_value());
      CHECK(neighbors(course, *back).next == nx);
    }
  }
}

TEST_CASE("reloading an unchanged bundle is deterministic") {
  const auto a = load_bundle(testsupport::courses_dir() / "intro-python");
  const auto b = load_bundle(testsupport::courses_dir() / "intro-python");
  CHECK(a == b);
}

TEST_CASE("bundle validation errors") {
  TempDir dir;
  const auto& root = dir.path();
  const auto ok_tests = json::array({testsupport::stdio_test("a\n", "b")});

  SUBCASE("missing manifest") { CHECK(load_error(root) == Errc::MissingManifest); }

  SUBCASE("missing tests file") {
    testsupport::write_problem(root, "hello", ok_tests);
    std::filesystem::remove(root / "hello" / "tests.json");
    testsupport::write_manifest(root, "c", {"hello"});
    CHECK(load_error(root) == Errc::MissingTests);
  }

  SUBCASE("empty tests") {
    testsupport::write_problem(root, "hello", json::array());
    testsupport::write_manifest(root, "c", {"hello"});
    CHECK(load_error(root) == Errc::MissingTests);
  }

  SUBCASE("duplicate id") {
    testsupport::write_problem(root, "hello", ok_tests);
    testsupport::write_manifest(root, "c", {"hello", "hello"});
    CHECK(load_error(root) == Errc::DuplicateProblemId);
  }

  SUBCASE("asset missing") {
    testsupport::write_problem(root, "hello", ok_tests);
    std::filesystem::remove(root / "hello" / "assets" / "demo.gif");
    testsupport::write_manifest(root, "c", {"hello"});
    CHECK(load_error(root) == Errc::AssetNotFound);
  }

  SUBCASE("object literal argument") {
    testsupport::write_problem(root, "f",
                               json::array({{{"kind", "function_call"},
                                             {"call", {{"name", "f"}, {"args", json::array({{{"a", 1}}})}}},
                                             {"expected", "1"}}}));
    testsupport::write_manifest(root, "c", {"f"});
    CHECK(load_error(root) == Errc::MalformedTest);
  }

  SUBCASE("overlapping filter lists") {
    testsupport::write_problem(root, "hello", ok_tests,
                               {{"disallowed", {"for"}}, {"allowed_hint", {"for", "if"}}});
    testsupport::write_manifest(root, "c", {"hello"});
    CHECK(load_error(root) == Errc::InvalidProblem);
  }

  SUBCASE("no assets") {
    testsupport::write_problem(root, "hello", ok_tests);
    auto problem = json::parse(std::ifstream(root / "hello" / "problem.json"));
    problem["assets"] = json::array();
    testsupport::write_file(root / "hello" / "problem.json", problem.dump());
    testsupport::write_manifest(root, "c", {"hello"});
    CHECK(load_error(root) == Errc::InvalidProblem);
  }

  SUBCASE("malformed json") {
    testsupport::write_file(root / "course.json", "{ nope");
    CHECK(load_error(root) == Errc::MalformedBundle);
  }
}

TEST_CASE("expected output is normalized on ingest") {
  const auto t = test_case_from_json(testsupport::stdio_test("x\n", "Hello  \r\nthere\t\n\n"), 0);
  CHECK(t.expected_output == "Hello\nthere");
}

TEST_CASE("test cases round-trip through the tests.json codec") {
  std::mt19937 rng(42);
  for (int i = 0; i < 300; ++i) {
    TestCase t;
    t.index = static_cast<std::size_t>(i % 9);
    if (std::bernoulli_distribution(0.5)(rng)) {
      t.kind = TestKind::stdio;
      t.stdin_text = testsupport::random_source(rng, 6);
    } else {
      t.kind = TestKind::function_call;
      t.call.name = "fn" + std::to_string(i);
      const auto n = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int a = 0; a < n; ++a) t.call.args.push_back(random_literal(rng, 3));
    }
    t.expected_output = normalize_output(testsupport::random_source(rng, 5));
    const auto back = test_case_from_json(test_case_to_json(t), t.index);
    CHECK(back == t);
  }
}

TEST_CASE("restricted literal grammar") {
  CHECK(is_restricted_literal(json::parse("[0, 1.5, \"a\", true, [[]]]")));
  CHECK_FALSE(is_restricted_literal(json::parse("{\"a\": 1}")));
  CHECK_FALSE(is_restricted_literal(json(nullptr)));
  CHECK_FALSE(is_restricted_literal(json::parse("[1, null]")));
  CHECK(render_python_literal(json::parse("[0, 1, 0, 2, 0, 3]")) == "[0, 1, 0, 2, 0, 3]");
  CHECK(render_python_literal(json::parse("[true, false, \"a\\\"b\"]")) == "[True, False, \"a\\\"b\"]");
  CHECK(render_python_literal(json(8.0)) == "8.0");
  CHECK_THROWS_AS((void)render_python_literal(json::parse("{\"a\": 1}")), Error);
}

TEST_CASE("describe_test_input") {
  const auto course = load_bundle(testsupport::courses_dir() / "python-functions");
  CHECK(describe_test_input(course.problems[0].tests[0]) == "counter([0, 1, 0, 2, 0, 3])");
  const auto intro = load_bundle(testsupport::courses_dir() / "intro-python");
  CHECK(describe_test_input(intro.problems[0].tests[0]) == "Sarah\n");
}

TEST_CASE("catalog reload keeps old snapshot on failure") {
  TempDir dir;
  testsupport::write_problem(dir.path(), "one", json::array({testsupport::stdio_test("", "1")}));
  testsupport::write_manifest(dir.path(), "c", {"one"});
  CourseCatalog catalog({dir.path()});
  const auto before = catalog.snapshot();
  REQUIRE(before->size() == 1);
  CHECK(CourseCatalog::find_course(*before, "c").problems.size() == 1);
  CHECK_THROWS_AS((void)CourseCatalog::find_course(*before, "nope"), Error);

  testsupport::write_problem(dir.path(), "two", json::array({testsupport::stdio_test("", "2")}));
  testsupport::write_manifest(dir.path(), "c", {"one", "two"});
  catalog.reload();
  const auto after = catalog.snapshot();
  CHECK(after->front().problems.size() == 2);
  CHECK(before->front().problems.size() == 1);

  testsupport::write_manifest(dir.path(), "c", {"one", "two", "missing"});
  CHECK_THROWS_AS(catalog.reload(), Error);
  CHECK(catalog.snapshot() == after);
}
