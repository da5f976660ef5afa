#pragma once

#include <cstddef>
#include <memory>
#include <string>

namespace promptbench {

struct JobeStubOptions {
  std::string python = "python3";
  std::size_t max_output_bytes = 1 << 20;
  int max_cputime_s = 60;
};

// What one run produced, using Jobe outcome codes.
struct StubRun {
  int outcome = 20;
  std::string cmpinfo;
  std::string stdout_text;
  std::string stderr_text;
};

// Syntax-checks and runs a Python program in a scratch directory under
// RLIMIT_CPU/RLIMIT_AS with a wall-clock backstop. Local testing only: there
// is no isolation beyond rlimits and a separate process group.
StubRun run_python_program(const std::string& source, const std::string& stdin_text, int cputime_s,
                           int memory_limit_mb, const JobeStubOptions& options = {});

// Minimal Jobe-compatible server answering POST/PUT
// /jobe/index.php/restapi/runs for language "python3".
class JobeStub {
public:
  explicit JobeStub(JobeStubOptions options = {});
  ~JobeStub();

  JobeStub(const JobeStub&) = delete;
  JobeStub& operator=(const JobeStub&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind + listen on a background thread; returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace promptbench
