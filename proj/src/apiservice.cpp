#include "promptbench/apiservice.hpp"

#include "promptbench/analytics.hpp"
#include "promptbench/chat_client.hpp"
#include "promptbench/jobe_client.hpp"
#include "promptbench/mock_backend.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace promptbench {

using nlohmann::json;

ServiceDeps make_service_deps(const ServiceConfig& config) {
  ServiceDeps deps;
  deps.catalog = std::make_shared<CourseCatalog>(config.bundles);
  deps.log = SessionLog::open_jsonl(config.log_path);
  std::shared_ptr<CompletionBackend> backend;
  if (config.backend.kind == BackendKind::mock) {
    backend = std::make_shared<MockBackend>(MockBackend::from_json_file(config.backend.mock_table));
  } else {
    backend = std::make_shared<ChatCompletionsClient>(ChatClientOptions{config.backend.base_url, config.backend.api_key});
  }
  deps.backend = std::make_shared<BoundedBackend>(std::move(backend), static_cast<std::ptrdiff_t>(config.backend_in_flight));
  deps.sandbox = std::make_shared<JobeClient>(config.sandbox_url);
  deps.generation = config.generation;
  deps.limits = config.limits;
  deps.admin_token = config.admin_token;
  deps.static_dir = config.static_dir;
  return deps;
}

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyPrompt:
    case Errc::MalformedRequest:
      return 400;
    case Errc::UnknownSession:
    case Errc::Unauthorized:
      return 401;
    case Errc::UnknownCourse:
    case Errc::UnknownProblem:
      return 404;
    case Errc::IndexConflict:
    case Errc::SubmissionInFlight:
      return 409;
    case Errc::FilterExhausted:
    case Errc::NoCode:
      return 422;
    case Errc::BackendTimeout:
    case Errc::BackendRejected:
    case Errc::QuotaExceeded:
    case Errc::SandboxUnreachable:
    case Errc::SandboxProtocolError:
      return 502;
    case Errc::StoreUnavailable:
      return 503;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, http_status(code), {{"error", std::string(to_string(code))}, {"message", message}});
}

std::string content_type_for(const std::filesystem::path& file) {
  auto ext = file.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".gif") return "image/gif";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

json first_failure_json(const PromptProblem& problem, const OutcomeSummary& outcome) {
  if (!outcome.first_failure) return nullptr;
  const auto index = *outcome.first_failure;
  const auto& verdict = outcome.verdicts.at(index);
  return {{"test_index", index},
          {"stdin_or_call", index < problem.tests.size() ? describe_test_input(problem.tests[index]) : std::string()},
          {"expected", verdict.expected},
          {"actual", verdict.actual},
          {"outcome_class", std::string(to_string(verdict.outcome_class))}};
}

} // namespace

struct ApiServer::Impl {
  ServiceDeps deps;
  httplib::Server server;
  std::thread thread;

  std::mutex sessions_mutex;
  std::set<std::string> sessions;

  std::mutex in_flight_mutex;
  std::set<std::tuple<std::string, std::string, std::string>> in_flight;

  explicit Impl(ServiceDeps d) : deps(std::move(d)) {
    for (auto& id : deps.log->session_ids()) sessions.insert(std::move(id));
    routes();
  }

  // Marks a (session, course, problem) submission as running for its lifetime.
  class InFlight {
  public:
    InFlight(Impl& impl, std::tuple<std::string, std::string, std::string> key)
        : impl_(impl), key_(std::move(key)) {
      std::lock_guard lock(impl_.in_flight_mutex);
      if (!impl_.in_flight.insert(key_).second) {
        throw Error(Errc::SubmissionInFlight, "a submission for this problem is already being evaluated");
      }
    }
    ~InFlight() {
      std::lock_guard lock(impl_.in_flight_mutex);
      impl_.in_flight.erase(key_);
    }
    InFlight(const InFlight&) = delete;
    InFlight& operator=(const InFlight&) = delete;

  private:
    Impl& impl_;
    std::tuple<std::string, std::string, std::string> key_;
  };

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        if (http_status(e.code()) >= 500) spdlog::warn("{} {}: {}", req.method, req.path, e.what());
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, Errc::MalformedRequest, e.what());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
      }
    };
  }

  bool known_session(const std::string& token) {
    std::lock_guard lock(sessions_mutex);
    return sessions.count(token) > 0;
  }

  // Session from ?session= or X-Session-Token; nullopt when absent.
  std::optional<std::string> caller_session(const httplib::Request& req) {
    std::string token = req.get_param_value("session");
    if (token.empty()) token = req.get_header_value("X-Session-Token");
    if (token.empty()) return std::nullopt;
    if (!known_session(token)) throw Error(Errc::UnknownSession, "unknown session token");
    return token;
  }

  void require_admin(const httplib::Request& req) {
    if (deps.admin_token.empty()) return;
    if (req.get_header_value("Authorization") != "Bearer " + deps.admin_token) {
      throw Error(Errc::Unauthorized, "analytics require the instructor token");
    }
  }

  static json parse_body_object(const httplib::Request& req, bool allow_empty) {
    if (allow_empty && req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedRequest, fmt::format("request body is not JSON: {}", e.what()));
    }
    if (!body.is_object()) throw Error(Errc::MalformedRequest, "request body must be a JSON object");
    return body;
  }

  json problem_payload(const Course& course, const PromptProblem& problem, const std::optional<std::string>& session) {
    const auto nav = neighbors(course, problem.id);
    json assets = json::array();
    for (const auto& a : problem.assets) assets.push_back(fmt::format("/assets/{}/{}/{}", course.id, problem.id, a));
    bool solved = false;
    std::uint32_t attempts = 0;
    if (session) {
      const auto state = deps.log->session_state(*session);
      if (auto it = state.problems.find({course.id, problem.id}); it != state.problems.end()) {
        solved = it->second.solved;
        attempts = it->second.attempt_count;
      }
    }
    return {{"course_id", course.id},
            {"id", problem.id},
            {"title", problem.title},
            {"scaffold", {{"kind", std::string(to_string(problem.scaffold.kind))}, {"prefix", problem.scaffold.prefix}}},
            {"assets", std::move(assets)},
            {"prev", nav.previous ? json(*nav.previous) : json(nullptr)},
            {"next", nav.next ? json(*nav.next) : json(nullptr)},
            {"solved", solved},
            {"attempt_count", attempts},
            {"test_count", problem.tests.size()}};
  }

  void routes() {
    server.set_payload_max_length(1 << 20);

    server.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      parse_body_object(req, true);
      std::string token = random_id();
      {
        std::lock_guard lock(sessions_mutex);
        sessions.insert(token);
      }
      send_json(res, 201, {{"session_token", token}});
    }));

    server.Get("/api/courses", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto snapshot = deps.catalog->snapshot();
      json out = json::array();
      for (const auto& c : *snapshot) {
        out.push_back({{"id", c.id}, {"title", c.title}, {"problem_count", c.problems.size()}});
      }
      send_json(res, 200, out);
    }));

    server.Get(R"(/api/courses/([^/]+)/problems)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto snapshot = deps.catalog->snapshot();
      const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
      const auto session = caller_session(req);
      const auto state = session ? deps.log->session_state(*session) : SessionState{};
      json problems = json::array();
      for (const auto& p : course.problems) {
        const auto it = state.problems.find({course.id, p.id});
        problems.push_back({{"id", p.id}, {"title", p.title}, {"solved", it != state.problems.end() && it->second.solved}});
      }
      send_json(res, 200, {{"course_id", course.id}, {"title", course.title}, {"problems", std::move(problems)}});
    }));

    server.Get(R"(/api/problems/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto snapshot = deps.catalog->snapshot();
      const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
      const auto& problem = get_problem(course, req.matches[2]);
      send_json(res, 200, problem_payload(course, problem, caller_session(req)));
    }));

    server.Post(R"(/api/problems/([^/]+)/([^/]+)/submissions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) { submit(req, res); }));

    server.Get(R"(/api/problems/([^/]+)/([^/]+)/submissions)",
               guarded([this](const httplib::Request& req, httplib::Response& res) { history(req, res); }));

    server.Get(R"(/api/analytics/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_admin(req);
      const auto snapshot = deps.catalog->snapshot();
      const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
      const auto& problem = get_problem(course, req.matches[2]);
      const auto records = deps.log->records();
      send_json(res, 200,
                {{"summary", to_json(summarize(records, course.id, problem.id))},
                 {"series", to_json(submission_series(records, course.id, problem.id))}});
    }));

    server.Post("/api/admin/reload", guarded([this](const httplib::Request& req, httplib::Response& res) {
      require_admin(req);
      deps.catalog->reload();
      send_json(res, 200, {{"courses", deps.catalog->snapshot()->size()}});
    }));

    server.Get(R"(/assets/([^/]+)/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto snapshot = deps.catalog->snapshot();
      const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
      const auto& problem = get_problem(course, req.matches[2]);
      const std::string name = req.matches[3];
      if (std::find(problem.assets.begin(), problem.assets.end(), name) == problem.assets.end()) {
        send_json(res, 404, {{"error", "AssetNotFound"}, {"message", "no such asset"}});
        return;
      }
      std::ifstream in(problem.asset_dir / name, std::ios::binary);
      std::stringstream data;
      data << in.rdbuf();
      res.set_content(data.str(), content_type_for(name));
    }));

    if (deps.static_dir && !server.set_mount_point("/app", deps.static_dir->string())) {
      spdlog::warn("static directory {} not mounted", deps.static_dir->string());
    }
  }

  void submit(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body_object(req, false);
    for (const auto& [key, _] : body.items()) {
      // Code only ever flows from the model to the student.
      if (key != "session_token" && key != "student_text") {
        throw Error(Errc::MalformedRequest, fmt::format("unexpected field \"{}\"", key));
      }
    }
    if (!body.contains("session_token") || !body["session_token"].is_string() || !body.contains("student_text") ||
        !body["student_text"].is_string()) {
      throw Error(Errc::MalformedRequest, "session_token and student_text are required strings");
    }
    const auto session = body["session_token"].get<std::string>();
    const auto student_text = body["student_text"].get<std::string>();
    if (!known_session(session)) throw Error(Errc::UnknownSession, "unknown session token");

    const auto snapshot = deps.catalog->snapshot();
    const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
    const auto& problem = get_problem(course, req.matches[2]);

    const auto prompt = compose_prompt(problem.scaffold, student_text, problem.filter, problem.exercise_language);
    InFlight guard(*this, {session, course.id, problem.id});

    auto checked = generate_checked_code(prompt, problem, deps.generation, *deps.backend);
    const auto outcome = evaluate(problem, checked.code.source, *deps.sandbox, deps.limits);
    if (outcome.sandbox_unreachable()) {
      throw Error(Errc::SandboxUnreachable, outcome.verdicts.front().run.stderr_text);
    }

    SubmissionRecord record;
    record.submission_id = random_id();
    record.session_id = session;
    record.course_id = course.id;
    record.problem_id = problem.id;
    record.submission_index = deps.log->attempt_count(session, course.id, problem.id) + 1;
    record.student_text = student_text;
    record.rendered_prompt = prompt.render();
    record.responses = checked.responses;
    record.extracted_source = checked.code.source;
    record.rejected_generations = checked.rejected_generations;
    record.outcome = summarize_outcome(outcome);
    record.created_at = now_ms();
    const auto id = deps.log->append(record);

    json variants = json::array();
    for (const auto& r : checked.responses) {
      variants.push_back({{"variant_index", r.variant_index}, {"raw_text", r.raw_text}});
    }
    json next = nullptr;
    if (outcome.passed_all) {
      if (auto n = neighbors(course, problem.id).next) next = *n;
    }
    send_json(res, 201,
              {{"submission_id", id},
               {"submission_index", record.submission_index},
               {"generated_code", checked.code.source},
               {"passed_all", outcome.passed_all},
               {"first_failure", first_failure_json(problem, record.outcome)},
               {"next_problem_id", next},
               {"rejected_generations", checked.rejected_generations},
               {"accepted_variant", checked.accepted_variant},
               {"variants", std::move(variants)}});
  }

  void history(const httplib::Request& req, httplib::Response& res) {
    const auto snapshot = deps.catalog->snapshot();
    const auto& course = CourseCatalog::find_course(*snapshot, req.matches[1]);
    const auto& problem = get_problem(course, req.matches[2]);
    const auto session = caller_session(req);
    if (!session) throw Error(Errc::UnknownSession, "a session token is required");
    json out = json::array();
    for (const auto& r : deps.log->fetch_session(*session, course.id, problem.id)) {
      out.push_back({{"submission_id", r.submission_id},
                     {"submission_index", r.submission_index},
                     {"student_text", r.student_text},
                     {"generated_code", r.extracted_source},
                     {"passed_all", r.outcome.passed_all},
                     {"first_failure", first_failure_json(problem, r.outcome)},
                     {"rejected_generations", r.rejected_generations},
                     {"created_at", r.created_at}});
    }
    send_json(res, 200, out);
  }
};

ApiServer::ApiServer(ServiceDeps deps) : impl_(std::make_unique<Impl>(std::move(deps))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

int ApiServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace promptbench
