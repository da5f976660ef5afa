#include "promptbench/error.hpp"
#include "promptbench/jobe_client.hpp"
#include "promptbench/jobe_stub.hpp"
#include "promptbench/literal.hpp"
#include "promptbench/problemstore.hpp"
#include "promptbench/sandbox.hpp"
#include "support.hpp"

#include <doctest.h>
#include <fmt/format.h>
#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

using namespace promptbench;
using nlohmann::json;

namespace {

const char* kMiddleThree =
    "nums = sorted(float(x) for x in input().split())\n"
    "print(round(sum(nums[1:4]) / 3, 2))\n";

const char* kMeanOfFive =
    "nums = [float(x) for x in input().split()]\n"
    "print(round(sum(nums) / len(nums), 2))\n";

// What print(round(v, 2)) shows for the values these tests meet: two
// decimals, trailing zeros dropped down to one.
std::string printed_2dp(double v) {
  auto s = fmt::format("{:.2f}", v);
  if (s.back() == '0') s.pop_back();
  return s;
}

std::vector<double> parse_numbers(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

std::string oracle_mean_of_five(const std::string& line) {
  const auto v = parse_numbers(line);
  double sum = 0;
  for (double x : v) sum += x;
  return printed_2dp(sum / double(v.size()));
}

std::string oracle_middle_three(const std::string& line) {
  auto v = parse_numbers(line);
  std::sort(v.begin(), v.end());
  return printed_2dp((v[1] + v[2] + v[3]) / 3.0);
}

struct StubFixture {
  JobeStub stub;
  int port = 0;
  StubFixture() { port = stub.start(); }
  ~StubFixture() { stub.stop(); }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

StubFixture& shared_stub() {
  static StubFixture fixture;
  return fixture;
}

const Course& intro() {
  static const Course course = load_bundle(testsupport::courses_dir() / "intro-python");
  return course;
}

RunSpec python_spec(std::string source, std::string stdin_text = "", int cpu = 10) {
  RunSpec spec;
  spec.language_id = "python3";
  spec.source = std::move(source);
  spec.stdin_text = std::move(stdin_text);
  spec.cpu_time_limit_s = cpu;
  return spec;
}

// A loopback port with nothing bound to it.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Scripted sandbox for properties that need no real execution.
struct ScriptedSandbox final : SandboxClient {
  std::function<RunResult(const RunSpec&)> fn;
  RunResult run(const RunSpec& spec) override { return fn(spec); }
};

} // namespace

TEST_CASE("judges oracle agrees with the bundled expectations") {
  // Hand arithmetic: (2+3+3+3+4)/5 = 3.0, (8+9.5+7.5+6+9)/5 = 8.0,
  // middle three of 6,7.5,8,9,9.5 = 24.5/3 = 8.1666..., of 4,6,6.5,7,8 = 6.5.
  CHECK(oracle_mean_of_five("2.0 3.0 3.0 3.0 4.0") == "3.0");
  CHECK(oracle_mean_of_five("8.0 9.5 7.5 6.0 9.0") == "8.0");
  CHECK(oracle_middle_three("8.0 9.5 7.5 6.0 9.0") == "8.17");
  const auto& judges = get_problem(intro(), "judges");
  for (const auto& t : judges.tests) CHECK(oracle_middle_three(t.stdin_text) == t.expected_output);
}

TEST_CASE("normalize_output examples") {
  CHECK(normalize_output("Hello Sarah  \r\n\n") == "Hello Sarah");
  CHECK(normalize_output("a\nb") == "a\nb");
  CHECK(normalize_output("8.17\n") == "8.17");
  CHECK(normalize_output("") == "");
  CHECK(normalize_output("  lead\n\n mid  \n\n\n") == "  lead\n\n mid");
  CHECK(normalize_output("Case\tInterior  spaces") == "Case\tInterior  spaces");
}

TEST_CASE("normalize_output is idempotent") {
  std::mt19937 rng(17);
  for (int i = 0; i < 2000; ++i) {
    const auto s = i % 2 ? testsupport::random_bytes(rng, 60) : testsupport::random_source(rng, 20);
    const auto once = normalize_output(s);
    REQUIRE(normalize_output(once) == once);
  }
}

TEST_CASE("first failing index is the minimum failing index") {
  std::mt19937 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    std::vector<Verdict> verdicts(n);
    std::optional<std::size_t> expected;
    for (std::size_t k = 0; k < n; ++k) {
      verdicts[k].test_index = k;
      verdicts[k].passed = std::bernoulli_distribution(0.7)(rng);
    }
    for (std::size_t k = n; k-- > 0;) {
      if (!verdicts[k].passed) expected = k;
    }
    REQUIRE(first_failing_index(verdicts) == expected);
  }
}

TEST_CASE("build_run examples") {
  const auto& judges = get_problem(intro(), "judges");
  const auto spec = build_run(judges, judges.tests[1], "src");
  CHECK(spec.stdin_text == "8.0 9.5 7.5 6.0 9.0\n");
  CHECK(spec.source == "src");
  CHECK(spec.language_id == "python3");
  CHECK(spec.cpu_time_limit_s == 10);
  CHECK(spec.memory_limit_mb == 256);

  const auto functions = load_bundle(testsupport::courses_dir() / "python-functions");
  const auto& counter = get_problem(functions, "counter");
  const auto driver = build_run(counter, counter.tests[0], "def counter(xs):\n    return xs.count(0)");
  const std::string tail = "print(counter([0, 1, 0, 2, 0, 3]))\n";
  CHECK(driver.source.substr(driver.source.size() - tail.size()) == tail);
  CHECK(driver.source.rfind("def counter(xs):\n    return xs.count(0)\n\n", 0) == 0);
  CHECK(driver.stdin_text.empty());

  TestCase record_like = counter.tests[0];
  record_like.call.args = {json{{"zeros", 3}}};
  try {
    (void)build_run(counter, record_like, "def counter(xs): pass");
    FAIL("expected DriverUnrenderable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DriverUnrenderable);
  }
}

TEST_CASE("python_float_repr matches CPython") {
  CHECK(python_float_repr(8.0) == "8.0");
  CHECK(python_float_repr(0.1) == "0.1");
  CHECK(python_float_repr(1e16) == "1e+16");
  CHECK(python_float_repr(1.5e-5) == "1.5e-05");
  CHECK(python_float_repr(-2.5) == "-2.5");

  std::mt19937_64 rng(31);
  std::vector<double> values = {0.0, 1e15, 1e-4, 123456789.125, 5e-324, 1.7976931348623157e308};
  for (int i = 0; i < 200; ++i) {
    const int exp = std::uniform_int_distribution<int>(-30, 30)(rng);
    values.push_back(std::uniform_real_distribution<double>(-10, 10)(rng) * std::pow(10.0, exp));
  }
  testsupport::TempDir dir;
  std::string script = "import sys\nfor line in sys.stdin:\n    print(repr(float.fromhex(line.strip())))\n";
  testsupport::write_file(dir.path() / "repr.py", script);
  std::string input;
  for (double v : values) input += fmt::format("{:a}\n", v);
  testsupport::write_file(dir.path() / "in.txt", input);
  const auto cmd = fmt::format("python3 '{}' < '{}'", (dir.path() / "repr.py").string(), (dir.path() / "in.txt").string());
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  REQUIRE(::pclose(pipe) == 0);
  std::istringstream lines(output);
  for (double v : values) {
    std::string want;
    std::getline(lines, want);
    CHECK_MESSAGE(python_float_repr(v) == want, fmt::format("{:a}", v));
  }
}

TEST_CASE("execute through the local stub") {
  JobeClient client(shared_stub().url());

  const auto echo = execute(python_spec("print('Hello ' + input())", "Sarah\n"), client);
  CHECK(echo.outcome_class == OutcomeClass::ok);
  CHECK(echo.stdout_text == "Hello Sarah\n");
  CHECK(echo.exit_code == 0);

  const auto crash = execute(python_spec("raise SystemExit(3)"), client);
  CHECK(crash.outcome_class == OutcomeClass::runtime_error);

  const auto broken = execute(python_spec("print(("), client);
  CHECK(broken.outcome_class == OutcomeClass::compile_error);
  CHECK_FALSE(broken.stderr_text.empty());

  const auto loop = execute(python_spec("while True:\n    pass\n", "", 1), client);
  CHECK(loop.outcome_class == OutcomeClass::time_limit);

  CHECK_THROWS_AS((void)execute(python_spec(""), client), std::invalid_argument);
  auto bad_limits = python_spec("print(1)");
  bad_limits.memory_limit_mb = 0;
  CHECK_THROWS_AS((void)execute(bad_limits, client), std::invalid_argument);
}

TEST_CASE("stdout is captured byte-exact") {
  JobeClient client(shared_stub().url());
  const auto out = execute(python_spec("import sys\nsys.stdout.write('a  \\r\\nb\\u00e9\\n\\n')"), client);
  CHECK(out.stdout_text == "a  \r\nb\xc3\xa9\n\n");
}

TEST_CASE("sandbox failures") {
  SUBCASE("HTTP 500 becomes sandbox_error with the body captured") {
    httplib::Server server;
    server.Post(kJobeRunsPath, [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("jobe is down", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    JobeClient client("http://127.0.0.1:" + std::to_string(port));
    const auto r = execute(python_spec("print(1)"), client);
    CHECK(r.outcome_class == OutcomeClass::sandbox_error);
    CHECK(r.stderr_text.find("jobe is down") != std::string::npos);
    CHECK_FALSE(r.unreachable);
    server.stop();
    t.join();
  }

  SUBCASE("malformed response") {
    httplib::Server server;
    server.Post(kJobeRunsPath, [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>", "text/html");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    JobeClient client("http://127.0.0.1:" + std::to_string(port));
    try {
      (void)execute(python_spec("print(1)"), client);
      FAIL("expected SandboxProtocolError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SandboxProtocolError);
    }
    server.stop();
    t.join();
  }

  SUBCASE("nothing listening") {
    const int port = closed_port();
    JobeClient client("http://127.0.0.1:" + std::to_string(port));
    try {
      (void)execute(python_spec("print(1)"), client);
      FAIL("expected SandboxUnreachable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SandboxUnreachable);
    }
    const auto& judges = get_problem(intro(), "judges");
    const auto outcome = evaluate(judges, kMiddleThree, client);
    CHECK(outcome.verdicts.size() == judges.tests.size());
    CHECK(outcome.sandbox_unreachable());
    CHECK_FALSE(outcome.passed_all);
    CHECK(outcome.first_failure == std::optional<std::size_t>(0));
    for (const auto& v : outcome.verdicts) CHECK(v.run.outcome_class == OutcomeClass::sandbox_error);
  }
}

TEST_CASE("jobe response mapping") {
  CHECK(outcome_from_jobe(15) == OutcomeClass::ok);
  CHECK(outcome_from_jobe(11) == OutcomeClass::compile_error);
  CHECK(outcome_from_jobe(12) == OutcomeClass::runtime_error);
  CHECK(outcome_from_jobe(13) == OutcomeClass::time_limit);
  CHECK(outcome_from_jobe(17) == OutcomeClass::sandbox_error);
  CHECK(outcome_from_jobe(21) == OutcomeClass::sandbox_error);

  const auto compile = JobeClient::parse_response(R"({"outcome": 11, "cmpinfo": "SyntaxError", "stdout": "", "stderr": ""})");
  CHECK(compile.outcome_class == OutcomeClass::compile_error);
  CHECK(compile.stderr_text.find("SyntaxError") != std::string::npos);
  CHECK_THROWS_AS((void)JobeClient::parse_response(R"({"stdout": ""})"), Error);

  RunSpec spec = python_spec("print(1)", "in");
  const auto body = JobeClient::request_body(spec);
  CHECK(body["run_spec"]["language_id"] == "python3");
  CHECK(body["run_spec"]["sourcecode"] == "print(1)");
  CHECK(body["run_spec"]["input"] == "in");
  CHECK(body["run_spec"]["parameters"]["cputime"] == 10);
}

TEST_CASE("evaluate judges programs") {
  JobeClient client(shared_stub().url());
  const auto& judges = get_problem(intro(), "judges");

  const auto correct = evaluate(judges, kMiddleThree, client);
  CHECK(correct.passed_all);
  CHECK_FALSE(correct.first_failure.has_value());
  REQUIRE(correct.verdicts.size() == 3);
  CHECK(correct.verdicts[1].actual == "8.17");

  const auto mean = evaluate(judges, kMeanOfFive, client);
  CHECK_FALSE(mean.passed_all);
  REQUIRE(mean.verdicts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto want = oracle_mean_of_five(judges.tests[i].stdin_text);
    CHECK(mean.verdicts[i].actual == want);
    CHECK(mean.verdicts[i].passed == (want == judges.tests[i].expected_output));
    CHECK(mean.verdicts[i].test_index == i);
  }
  CHECK(mean.verdicts[0].passed);
  CHECK(mean.first_failure == std::optional<std::size_t>(1));
  CHECK(mean.verdicts[1].expected == "8.17");
  CHECK(mean.verdicts[1].actual == "8.0");

  const auto broken = evaluate(judges, "print((", client);
  CHECK(broken.first_failure == std::optional<std::size_t>(0));
  for (const auto& v : broken.verdicts) CHECK(v.run.outcome_class == OutcomeClass::compile_error);
}

TEST_CASE("evaluate the bundled hello, ages and counter problems") {
  JobeClient client(shared_stub().url());
  const auto& hello = get_problem(intro(), "hello");
  CHECK(evaluate(hello, "name = input('Enter your name: ')\nprint('Hello', name)\n", client).passed_all);

  const auto& ages = get_problem(intro(), "ages");
  const auto ages_src =
      "age = int(input('Enter your age: '))\n"
      "if age < 13:\n    print('Child')\nelif age < 20:\n    print('Teenager')\nelse:\n    print('Adult')\n";
  CHECK(evaluate(ages, ages_src, client).passed_all);

  const auto functions = load_bundle(testsupport::courses_dir() / "python-functions");
  const auto& counter = get_problem(functions, "counter");
  const auto ok = evaluate(counter, "def counter(xs):\n    n = 0\n    for x in xs:\n        if x == 0:\n            n += 1\n    return n\n", client);
  CHECK(ok.passed_all);
  const auto off_by_one = evaluate(counter, "def counter(xs):\n    return xs.count(0) + 1\n", client);
  CHECK(off_by_one.first_failure == std::optional<std::size_t>(0));
}

TEST_CASE("evaluate invariants under arbitrary sandbox behaviour") {
  const auto& judges = get_problem(intro(), "judges");
  std::mt19937 rng(41);
  std::mutex rng_mutex;
  ScriptedSandbox sandbox;
  sandbox.fn = [&](const RunSpec& spec) -> RunResult {
    int roll;
    {
      std::lock_guard lock(rng_mutex);
      roll = std::uniform_int_distribution<int>(0, 6)(rng);
    }
    RunResult r;
    switch (roll) {
    case 0: throw Error(Errc::SandboxUnreachable, "down");
    case 1: throw Error(Errc::SandboxProtocolError, "garbage");
    case 2: r.outcome_class = OutcomeClass::runtime_error; r.exit_code = 1; return r;
    case 3: r.outcome_class = OutcomeClass::time_limit; return r;
    case 4: r.outcome_class = OutcomeClass::ok; r.exit_code = 0; r.stdout_text = "wrong\n"; return r;
    default:
      r.outcome_class = OutcomeClass::ok;
      r.exit_code = 0;
      r.stdout_text = oracle_middle_three(spec.stdin_text) + "\n";
      return r;
    }
  };
  for (int i = 0; i < 200; ++i) {
    RunLimits limits;
    limits.max_concurrent_runs = 1 + static_cast<std::size_t>(i % 4);
    const auto outcome = evaluate(judges, "x", sandbox, limits);
    REQUIRE(outcome.verdicts.size() == judges.tests.size());
    bool all = true;
    std::optional<std::size_t> first;
    for (std::size_t k = 0; k < outcome.verdicts.size(); ++k) {
      const auto& v = outcome.verdicts[k];
      CHECK(v.test_index == k);
      CHECK(v.passed == (v.run.outcome_class == OutcomeClass::ok && v.actual == v.expected));
      if (!v.passed && !first) first = k;
      all = all && v.passed;
    }
    CHECK(outcome.passed_all == all);
    CHECK(outcome.first_failure == first);
  }
}
