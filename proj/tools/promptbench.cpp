#include "promptbench/analytics.hpp"
#include "promptbench/apiservice.hpp"
#include "promptbench/config.hpp"
#include "promptbench/error.hpp"
#include "promptbench/jobe_stub.hpp"
#include "promptbench/problemstore.hpp"
#include "promptbench/sessionlog.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

namespace pb = promptbench;

namespace {

std::function<void()> g_shutdown;

void on_signal(int) {
  if (g_shutdown) g_shutdown();
}

int run_serve(const std::string& config_path) {
  auto config = pb::load_config(config_path);
  pb::apply_env_overrides(config, pb::process_env);
  pb::ApiServer server(pb::make_service_deps(config));
  const int port = server.bind(config.host, config.port);
  if (port < 0) {
    spdlog::error("cannot bind {}:{}", config.host, config.port);
    return 1;
  }
  g_shutdown = [&server] { server.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving on http://{}:{}", config.host, port);
  server.listen();
  spdlog::info("shut down");
  return 0;
}

int run_validate(const std::string& path) {
  const auto course = pb::load_bundle(path);
  std::size_t tests = 0;
  for (const auto& p : course.problems) tests += p.tests.size();
  fmt::print("{}: course \"{}\" ({}) with {} problems and {} tests\n", path, course.id, course.title,
             course.problems.size(), tests);
  for (const auto& p : course.problems) {
    fmt::print("  {:<16} {:<8} {} tests, {} assets\n", p.id, pb::to_string(p.scaffold.kind), p.tests.size(),
               p.assets.size());
  }
  return 0;
}

int run_analyze(const std::string& log_path, const std::string& course_id, const std::string& problem_id,
                const std::string& format) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw pb::Error(pb::Errc::StoreUnavailable, fmt::format("cannot read {}", log_path));
  const auto records = pb::read_jsonl(in);

  std::vector<std::string> problems;
  if (!problem_id.empty()) {
    const auto known = pb::problems_in_log(records, course_id);
    if (std::find(known.begin(), known.end(), problem_id) == known.end()) {
      throw pb::Error(pb::Errc::UnknownProblem,
                      fmt::format("no submissions for problem \"{}\" in course \"{}\"", problem_id, course_id));
    }
    problems.push_back(problem_id);
  } else {
    problems = pb::problems_in_log(records, course_id);
  }

  if (format == "json") {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& id : problems) {
      out.push_back({{"summary", pb::to_json(pb::summarize(records, course_id, id))},
                     {"series", pb::to_json(pb::submission_series(records, course_id, id))}});
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  fmt::print("kind,problem_id,students_attempted,students_solved,avg_submissions,avg_submissions_solvers,avg_words\n");
  for (const auto& id : problems) {
    const auto s = pb::summarize(records, course_id, id);
    fmt::print("summary,{},{},{},{:.1f},{:.1f},{}\n", id, s.students_attempted, s.students_solved,
               s.avg_submissions_display(), s.avg_submissions_solvers_display(), s.avg_words_display());
  }
  fmt::print("kind,problem_id,submission_index,submitter_count,avg_words\n");
  for (const auto& id : problems) {
    for (const auto& p : pb::submission_series(records, course_id, id)) {
      fmt::print("series,{},{},{},{:.2f}\n", id, p.submission_index, p.submitter_count, p.avg_words);
    }
  }
  return 0;
}

int run_stub(const std::string& host, int port) {
  pb::JobeStub stub;
  const int bound = stub.bind(host, port);
  if (bound < 0) {
    spdlog::error("cannot bind {}:{}", host, port);
    return 1;
  }
  g_shutdown = [&stub] { stub.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("jobe stub on http://{}:{}", host, bound);
  stub.listen();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt Problems server and tools"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", config_path, "Config file (defaults to $PROMPTBENCH_CONFIG)");

  std::string bundle_path;
  auto* validate = app.add_subcommand("validate-bundle", "Load and validate a course bundle");
  validate->add_option("path", bundle_path, "Bundle directory")->required();

  std::string log_path, course_id, problem_id, format = "json";
  auto* analyze = app.add_subcommand("analyze", "Usage statistics from a submission log");
  analyze->add_option("--log", log_path, "JSONL submission log")->required();
  analyze->add_option("--course", course_id, "Course id")->required();
  analyze->add_option("--problem", problem_id, "Problem id (default: every problem in the log)");
  analyze->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  std::string stub_host = "127.0.0.1";
  int stub_port = 4000;
  auto* stub = app.add_subcommand("sandbox-stub", "Run a local Jobe-compatible sandbox for testing");
  stub->add_option("--host", stub_host, "Listen address");
  stub->add_option("--port", stub_port, "Listen port");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      if (config_path.empty()) {
        if (auto env = pb::process_env("PROMPTBENCH_CONFIG")) config_path = *env;
      }
      if (config_path.empty()) {
        std::cerr << "serve: --config or PROMPTBENCH_CONFIG is required\n";
        return 2;
      }
      return run_serve(config_path);
    }
    if (*validate) return run_validate(bundle_path);
    if (*analyze) return run_analyze(log_path, course_id, problem_id, format);
    if (*stub) return run_stub(stub_host, stub_port);
  } catch (const pb::Error& e) {
    std::cerr << "error: " << pb::to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
