#pragma once

#include "promptbench/config.hpp"
#include "promptbench/error.hpp"
#include "promptbench/problemstore.hpp"
#include "promptbench/promptpipeline.hpp"
#include "promptbench/sandbox.hpp"
#include "promptbench/sessionlog.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace promptbench {

struct ServiceDeps {
  std::shared_ptr<CourseCatalog> catalog;
  std::shared_ptr<SessionLog> log;
  std::shared_ptr<CompletionBackend> backend;
  std::shared_ptr<SandboxClient> sandbox;
  GenerationConfig generation;
  RunLimits limits;
  std::string admin_token;
  std::optional<std::filesystem::path> static_dir;
};

// Builds every dependency from a config: bundles, JSONL log, backend
// (bounded to backend_in_flight concurrent calls) and Jobe client.
ServiceDeps make_service_deps(const ServiceConfig& config);

int http_status(Errc code) noexcept;

// JSON/HTTP surface:
//   POST /api/sessions
//   GET  /api/courses
//   GET  /api/courses/{course}/problems
//   GET  /api/problems/{course}/{problem}
//   POST /api/problems/{course}/{problem}/submissions
//   GET  /api/problems/{course}/{problem}/submissions?session=...
//   GET  /api/analytics/{course}/{problem}
//   POST /api/admin/reload
//   GET  /assets/{course}/{problem}/{file}, /app/*
// Errors are {"error": code, "message": text}.
class ApiServer {
public:
  explicit ApiServer(ServiceDeps deps);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop(); in-flight requests finish first.
  void listen();
  // bind + listen on a background thread; returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace promptbench
