#include "promptbench/jobe_stub.hpp"

#include "promptbench/jobe_client.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cerrno>
#include <chrono>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <poll.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <vector>

namespace promptbench {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 15;
constexpr int kCompileError = 11;
constexpr int kRuntimeError = 12;
constexpr int kTimeLimit = 13;
constexpr int kServerError = 20;

constexpr const char* kSyntaxCheck =
    "import sys, traceback\n"
    "try:\n"
    "    compile(open(sys.argv[1], 'rb').read(), 'prog.py', 'exec')\n"
    "except (SyntaxError, ValueError) as e:\n"
    "    sys.stderr.write(''.join(traceback.format_exception_only(type(e), e)))\n"
    "    sys.exit(1)\n";

class ScratchDir {
public:
  ScratchDir() {
    std::string pattern = (fs::temp_directory_path() / "jobe-stub-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

struct ChildResult {
  int status = 0;
  bool timed_out = false;
  bool output_overflow = false;
  double cpu_seconds = 0;
  std::string out;
  std::string err;
};

class Fd {
public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

private:
  int fd_;
};

ChildResult run_child(const std::vector<std::string>& argv, const std::string& input, const fs::path& cwd,
                      int cpu_limit_s, long memory_limit_mb, std::chrono::milliseconds wall_limit,
                      std::size_t max_output) {
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
  Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
  Fd out_r(out_pipe[0]), out_w(out_pipe[1]);
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
  Fd err_r(err_pipe[0]), err_w(err_pipe[1]);

  // Everything the child touches is prepared before fork.
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  const std::string home = "HOME=" + cwd.string();
  std::vector<std::string> env_strings = {"PATH=/usr/local/bin:/usr/bin:/bin", home, "LANG=C.UTF-8",
                                          "PYTHONIOENCODING=utf-8", "PYTHONDONTWRITEBYTECODE=1",
                                          "PYTHONHASHSEED=0"};
  std::vector<char*> env;
  for (auto& e : env_strings) env.push_back(e.data());
  env.push_back(nullptr);
  const std::string dir = cwd.string();
  const rlimit cpu{static_cast<rlim_t>(cpu_limit_s), static_cast<rlim_t>(cpu_limit_s + 1)};
  const rlimit mem{static_cast<rlim_t>(memory_limit_mb) << 20, static_cast<rlim_t>(memory_limit_mb) << 20};
  const rlimit fsize{16 << 20, 16 << 20};

  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    if (::chdir(dir.c_str()) != 0) ::_exit(127);
    ::setrlimit(RLIMIT_CPU, &cpu);
    ::setrlimit(RLIMIT_AS, &mem);
    ::setrlimit(RLIMIT_FSIZE, &fsize);
    ::execvpe(args[0], args.data(), env.data());
    ::_exit(127);
  }

  in_r.reset();
  out_w.reset();
  err_w.reset();
  ::fcntl(in_w.get(), F_SETFL, O_NONBLOCK);

  ChildResult result;
  std::size_t written = 0;
  if (input.empty()) in_w.reset();
  const auto deadline = std::chrono::steady_clock::now() + wall_limit;
  bool out_open = true, err_open = true;
  char buf[65536];

  while (out_open || err_open) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      break;
    }
    std::vector<pollfd> fds;
    if (out_open) fds.push_back({out_r.get(), POLLIN, 0});
    if (err_open) fds.push_back({err_r.get(), POLLIN, 0});
    if (in_w.get() >= 0) fds.push_back({in_w.get(), POLLOUT, 0});
    const int ready = ::poll(fds.data(), fds.size(), static_cast<int>(std::min<long>(remaining.count(), 100)));
    if (ready < 0 && errno != EINTR) break;
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == in_w.get()) {
        const auto n = ::write(in_w.get(), input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN) in_w.reset();
        if (written >= input.size()) in_w.reset();
        continue;
      }
      const auto n = ::read(p.fd, buf, sizeof buf);
      auto& sink = p.fd == out_r.get() ? result.out : result.err;
      if (n > 0) {
        sink.append(buf, static_cast<std::size_t>(n));
        if (sink.size() > max_output) {
          sink.resize(max_output);
          result.output_overflow = true;
        }
      } else if (n == 0 || errno != EAGAIN) {
        (p.fd == out_r.get() ? out_open : err_open) = false;
      }
    }
    if (result.output_overflow) break;
  }

  if (result.timed_out || result.output_overflow) ::kill(-pid, SIGKILL);
  in_w.reset();
  rusage usage{};
  ::wait4(pid, &result.status, 0, &usage);
  // Reap stragglers the program may have forked.
  ::kill(-pid, SIGKILL);
  result.cpu_seconds = static_cast<double>(usage.ru_utime.tv_sec + usage.ru_stime.tv_sec) +
                       static_cast<double>(usage.ru_utime.tv_usec + usage.ru_stime.tv_usec) / 1e6;
  return result;
}

} // namespace

StubRun run_python_program(const std::string& source, const std::string& stdin_text, int cputime_s,
                           int memory_limit_mb, const JobeStubOptions& options) {
  ScratchDir scratch;
  {
    std::ofstream out(scratch.path() / "prog.py", std::ios::binary);
    out << source;
  }

  StubRun run;
  const auto check = run_child({options.python, "-c", kSyntaxCheck, "prog.py"}, "", scratch.path(), 10,
                               std::max(memory_limit_mb, 256), std::chrono::seconds(20), options.max_output_bytes);
  if (!WIFEXITED(check.status) || WEXITSTATUS(check.status) != 0) {
    run.outcome = WIFEXITED(check.status) && WEXITSTATUS(check.status) == 127 ? kServerError : kCompileError;
    run.cmpinfo = check.err;
    return run;
  }

  const auto wall = std::chrono::milliseconds(cputime_s * 2000 + 2000);
  const auto child = run_child({options.python, "prog.py"}, stdin_text, scratch.path(), cputime_s, memory_limit_mb,
                               wall, options.max_output_bytes);
  run.stdout_text = child.out;
  run.stderr_text = child.err;
  if (child.timed_out) {
    run.outcome = kTimeLimit;
  } else if (child.output_overflow) {
    run.outcome = kRuntimeError;
    run.stderr_text += "\n[output limit exceeded]";
  } else if (WIFSIGNALED(child.status)) {
    const int sig = WTERMSIG(child.status);
    const bool cpu_exhausted = sig == SIGXCPU || (sig == SIGKILL && child.cpu_seconds >= cputime_s * 0.95);
    run.outcome = cpu_exhausted ? kTimeLimit : kRuntimeError;
  } else if (WEXITSTATUS(child.status) != 0) {
    run.outcome = kRuntimeError;
  } else {
    run.outcome = kOk;
  }
  return run;
}

struct JobeStub::Impl {
  JobeStubOptions options;
  httplib::Server server;
  std::thread thread;
};

JobeStub::JobeStub(JobeStubOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  std::signal(SIGPIPE, SIG_IGN);

  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      res.status = 400;
      res.set_content("\"malformed JSON\"", "application/json");
      return;
    }
    const auto* spec = body.contains("run_spec") && body["run_spec"].is_object() ? &body["run_spec"] : nullptr;
    if (spec == nullptr || !spec->contains("sourcecode") || !(*spec)["sourcecode"].is_string()) {
      res.status = 400;
      res.set_content("\"run_spec.sourcecode missing\"", "application/json");
      return;
    }
    const auto language = spec->value("language_id", std::string{});
    if (language != "python3") {
      res.status = 400;
      res.set_content(nlohmann::json(fmt::format("language \"{}\" not supported", language)).dump(),
                      "application/json");
      return;
    }
    int cputime = 5;
    int memory = 256;
    if (spec->contains("parameters") && (*spec)["parameters"].is_object()) {
      const auto& params = (*spec)["parameters"];
      cputime = params.value("cputime", cputime);
      memory = params.value("memorylimit", memory);
    }
    cputime = std::clamp(cputime, 1, impl_->options.max_cputime_s);
    memory = std::clamp(memory, 32, 4096);

    StubRun run;
    try {
      run = run_python_program((*spec)["sourcecode"].get<std::string>(), spec->value("input", std::string{}),
                               cputime, memory, impl_->options);
    } catch (const std::exception& e) {
      spdlog::error("jobe stub: {}", e.what());
      run.outcome = kServerError;
      run.stderr_text = e.what();
    }
    const nlohmann::json reply = {{"run_id", nullptr},
                                  {"outcome", run.outcome},
                                  {"cmpinfo", run.cmpinfo},
                                  {"stdout", run.stdout_text},
                                  {"stderr", run.stderr_text}};
    res.set_content(reply.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
  };
  impl_->server.Post(kJobeRunsPath, handler);
  impl_->server.Put(kJobeRunsPath, handler);
  impl_->server.Get("/jobe/index.php/restapi/languages", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"([["python3","3"]])", "application/json");
  });
}

JobeStub::~JobeStub() { stop(); }

int JobeStub::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void JobeStub::listen() { impl_->server.listen_after_bind(); }

int JobeStub::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) throw std::runtime_error(fmt::format("jobe stub cannot bind {}:{}", host, port));
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void JobeStub::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace promptbench
