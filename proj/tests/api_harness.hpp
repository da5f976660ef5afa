#pragma once

#include "promptbench/apiservice.hpp"
#include "promptbench/jobe_client.hpp"
#include "promptbench/jobe_stub.hpp"
#include "promptbench/mock_backend.hpp"
#include "support.hpp"

#include <httplib.h>

namespace testsupport {

// In-process service: the bundled courses (or the given bundles), in-memory log, the given backend and
// a sandbox client (the local Jobe stub unless one is supplied).
class ApiHarness {
public:
  explicit ApiHarness(std::shared_ptr<promptbench::CompletionBackend> backend,
                      std::shared_ptr<promptbench::SandboxClient> sandbox = nullptr, std::string admin_token = "",
                      std::shared_ptr<promptbench::SessionLog> log = nullptr,
                      std::vector<std::filesystem::path> bundles = {}) {
    if (bundles.empty()) bundles = {courses_dir() / "intro-python", courses_dir() / "python-functions"};
    promptbench::ServiceDeps deps;
    deps.catalog = std::make_shared<promptbench::CourseCatalog>(std::move(bundles));
    deps.log = log ? std::move(log) : std::make_shared<promptbench::SessionLog>();
    deps.backend = std::move(backend);
    if (!sandbox) {
      stub_ = std::make_unique<promptbench::JobeStub>();
      const int stub_port = stub_->start();
      sandbox = std::make_shared<promptbench::JobeClient>("http://127.0.0.1:" + std::to_string(stub_port));
    }
    deps.sandbox = std::move(sandbox);
    deps.admin_token = std::move(admin_token);
    log_ = deps.log;
    server_ = std::make_unique<promptbench::ApiServer>(std::move(deps));
    port_ = server_->start();
  }

  ~ApiHarness() {
    server_->stop();
    if (stub_) stub_->stop();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

  std::string new_session() const {
    auto res = client().Post("/api/sessions", "", "application/json");
    if (!res || res->status != 201) throw std::runtime_error("session creation failed");
    return nlohmann::json::parse(res->body)["session_token"].get<std::string>();
  }

  // POST a submission; returns (status, parsed body).
  std::pair<int, nlohmann::json> submit(const std::string& course, const std::string& problem,
                                        const std::string& session, const std::string& text) const {
    const nlohmann::json body = {{"session_token", session}, {"student_text", text}};
    auto res = client().Post("/api/problems/" + course + "/" + problem + "/submissions", body.dump(),
                             "application/json");
    if (!res) throw std::runtime_error("submission request failed");
    return {res->status, nlohmann::json::parse(res->body)};
  }

  std::pair<int, nlohmann::json> get(const std::string& path, const httplib::Headers& headers = {}) const {
    auto res = client().Get(path, headers);
    if (!res) throw std::runtime_error("GET failed");
    return {res->status, res->body.empty() ? nlohmann::json() : nlohmann::json::parse(res->body, nullptr, false)};
  }

  promptbench::SessionLog& log() const { return *log_; }
  int port() const { return port_; }

private:
  std::unique_ptr<promptbench::JobeStub> stub_;
  std::shared_ptr<promptbench::SessionLog> log_;
  std::unique_ptr<promptbench::ApiServer> server_;
  int port_ = 0;
};

} // namespace testsupport
