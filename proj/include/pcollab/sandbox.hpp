#pragma once

// Tool-code execution. Requests and results follow the worker's line-delimited
// JSON protocol; InProcessSandbox runs the restricted interpreter directly and
// SubprocessSandbox drives external worker processes over stdio.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcollab/decimal.hpp"
#include "pcollab/errors.hpp"
#include "pcollab/minipy/interpreter.hpp"

namespace pcollab {

struct ExecRequest {
  std::string id;
  std::string code;
  int timeout_ms = 5000;
  int memory_cap_mb = 256;

  nlohmann::json to_json() const {
    return {{"id", id}, {"code", code}, {"timeout_ms", timeout_ms}, {"memory_cap_mb", memory_cap_mb}};
  }
  static ExecRequest from_json(const nlohmann::json& j) {
    ExecRequest r;
    r.id = j.at("id").get<std::string>();
    r.code = j.at("code").get<std::string>();
    r.timeout_ms = j.value("timeout_ms", 5000);
    r.memory_cap_mb = j.value("memory_cap_mb", 256);
    if (r.timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
    return r;
  }
};

enum class ExecStatus { Ok, Error, Timeout };

inline std::string to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::Ok:
      return "ok";
    case ExecStatus::Error:
      return "error";
    case ExecStatus::Timeout:
      return "timeout";
  }
  return "error";
}

inline ExecStatus parse_exec_status(const std::string& s) {
  if (s == "ok") return ExecStatus::Ok;
  if (s == "timeout") return ExecStatus::Timeout;
  return ExecStatus::Error;
}

struct ExecResult {
  std::string id;
  ExecStatus status = ExecStatus::Error;
  std::optional<std::string> answer;  // exact decimal string, present iff status is ok
  std::string answer_repr;
  std::string stdout_text;
  std::string error;

  bool ok() const { return status == ExecStatus::Ok; }

  /// The answer as a Decimal, or nullopt when absent or out of range.
  std::optional<Decimal> decimal_answer() const { return answer ? Decimal::parse(*answer) : std::nullopt; }

  nlohmann::json to_json() const {
    return {{"id", id},
            {"status", to_string(status)},
            {"answer", answer ? nlohmann::json(*answer) : nlohmann::json(nullptr)},
            {"answer_repr", answer_repr},
            {"stdout", stdout_text},
            {"error", error}};
  }
  static ExecResult from_json(const nlohmann::json& j) {
    ExecResult r;
    r.id = j.at("id").get<std::string>();
    r.status = parse_exec_status(j.at("status").get<std::string>());
    if (j.contains("answer") && j["answer"].is_string()) r.answer = j["answer"].get<std::string>();
    r.answer_repr = j.value("answer_repr", "");
    r.stdout_text = j.value("stdout", "");
    r.error = j.value("error", "");
    if (r.ok() != r.answer.has_value()) {
      r.status = ExecStatus::Error;
      r.answer.reset();
      if (r.error.empty()) r.error = "worker reported ok without an answer";
    }
    return r;
  }
};

class Sandbox {
 public:
  virtual ~Sandbox() = default;
  virtual ExecResult execute(const ExecRequest& req) = 0;
};

namespace sandbox_detail {

/// Exact decimal text for a numeric interpreter value, or nullopt.
inline std::optional<std::string> numeric_text(const minipy::Value& v) {
  if (v.is<minipy::Int>()) return minipy::int_to_string(v.as<minipy::Int>());
  if (v.is<double>()) {
    if (!std::isfinite(v.as<double>())) return std::nullopt;
    return minipy::float_fixed(v.as<double>());
  }
  if (v.is<std::string>()) {
    std::string s = v.as<std::string>();
    s.erase(0, s.find_first_not_of(" \t\r\n"));
    s.erase(s.find_last_not_of(" \t\r\n") + 1);
    if (Decimal::parse(s)) return s;
  }
  return std::nullopt;
}

inline std::optional<std::string> last_numeric_line(const std::string& out) {
  std::size_t end = out.size();
  while (end > 0) {
    std::size_t start = out.rfind('\n', end - 1);
    start = start == std::string::npos ? 0 : start + 1;
    std::string line = out.substr(start, end - start);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty()) return Decimal::parse(line) ? std::optional(line) : std::nullopt;
    if (start == 0) break;
    end = start - 1;
  }
  return std::nullopt;
}

}  // namespace sandbox_detail

/// Runs one request through the restricted interpreter. The answer is the
/// value bound to `ans`, else the last module-level assignment, else the last
/// stdout line when it is a bare number.
inline ExecResult run_request(const ExecRequest& req) {
  ExecResult res;
  res.id = req.id;
  minipy::Limits limits;
  limits.deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(req.timeout_ms);
  limits.max_cells = static_cast<std::size_t>(std::max(1, req.memory_cap_mb)) * 16384;  // ~64 bytes per cell
  try {
    minipy::Interpreter interp(limits);
    auto run = interp.run(req.code);
    res.stdout_text = run.stdout_text;
    std::optional<minipy::Value> chosen;
    if (auto it = run.globals.find("ans"); it != run.globals.end()) chosen = it->second;
    else if (run.last_assignment) chosen = run.last_assignment;

    if (chosen) {
      res.answer_repr = minipy::repr(*chosen);
      if (chosen->is<bool>()) {
        res.error = "answer is a bool, not a number";
      } else if (auto text = sandbox_detail::numeric_text(*chosen)) {
        res.answer = *text;
      } else {
        res.error = "answer is not a finite number: " + res.answer_repr;
      }
    } else if (auto line = sandbox_detail::last_numeric_line(run.stdout_text)) {
      res.answer = *line;
      res.answer_repr = *line;
    } else {
      res.error = "no answer: bind `ans` or assign the result to a variable";
    }
    res.status = res.answer ? ExecStatus::Ok : ExecStatus::Error;
  } catch (const minipy::PyError& e) {
    res.status = ExecStatus::Error;
    res.error = e.what();
  } catch (const minipy::Timeout&) {
    res.status = ExecStatus::Timeout;
    res.error = "wall clock exceeded " + std::to_string(req.timeout_ms) + " ms";
  } catch (const std::bad_alloc&) {
    res.status = ExecStatus::Error;
    res.error = "MemoryError";
  }
  return res;
}

/// Executes in the calling thread. Stateless, so safe to share across threads.
class InProcessSandbox : public Sandbox {
 public:
  ExecResult execute(const ExecRequest& req) override { return run_request(req); }
};

/// Spawns one worker process per request (recycled after it answers), at most
/// `pool_size` at a time. A watchdog kills workers that exceed the request's
/// timeout plus a grace period.
class SubprocessSandbox : public Sandbox {
 public:
  struct Options {
    std::vector<std::string> argv;  // worker command line
    int pool_size = 4;
    int grace_ms = 500;
  };

  explicit SubprocessSandbox(Options opts) : opts_(std::move(opts)), slots_(std::max(1, opts_.pool_size)) {
    if (opts_.argv.empty()) throw ConfigError("sandbox worker command is empty");
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
  }

  ExecResult execute(const ExecRequest& req) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    ++spawned_;
    return run_worker(req);
  }

  /// Workers started so far.
  std::size_t spawned() const { return spawned_.load(); }

 private:
  Options opts_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> spawned_{0};

  static ExecResult failure(const ExecRequest& req, ExecStatus status, std::string msg) {
    ExecResult r;
    r.id = req.id;
    r.status = status;
    r.error = std::move(msg);
    return r;
  }

  ExecResult run_worker(const ExecRequest& req) {
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) return failure(req, ExecStatus::Error, "pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      return failure(req, ExecStatus::Error, "pipe failed");
    }
    std::vector<char*> args;
    for (auto& a : opts_.argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      return failure(req, ExecStatus::Error, "fork failed");
    }
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);

    const std::string line = req.to_json().dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(in_pipe[1], line.data() + written, line.size() - written);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      written += static_cast<std::size_t>(n);
    }
    ::close(in_pipe[1]);  // EOF lets the worker exit after answering

    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(req.timeout_ms + opts_.grace_ms);
    std::string reply;
    bool timed_out = false;
    char buf[4096];
    while (reply.find('\n') == std::string::npos) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        timed_out = true;
        break;
      }
      pollfd p{out_pipe[0], POLLIN, 0};
      const int pr = ::poll(&p, 1, static_cast<int>(left.count()));
      if (pr < 0 && errno == EINTR) continue;
      if (pr == 0) {
        timed_out = true;
        break;
      }
      const ssize_t n = ::read(out_pipe[0], buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      reply.append(buf, static_cast<std::size_t>(n));
    }
    ::close(out_pipe[0]);
    if (timed_out) ::kill(pid, SIGKILL);
    int wstatus = 0;
    while (::waitpid(pid, &wstatus, 0) < 0 && errno == EINTR) {
    }

    if (timed_out)
      return failure(req, ExecStatus::Timeout, "worker killed after " + std::to_string(req.timeout_ms) + " ms");
    const auto nl = reply.find('\n');
    if (nl == std::string::npos) return failure(req, ExecStatus::Error, "worker exited without a response");
    try {
      ExecResult r = ExecResult::from_json(nlohmann::json::parse(reply.substr(0, nl)));
      if (r.id != req.id) return failure(req, ExecStatus::Error, "worker answered id " + r.id);
      return r;
    } catch (const std::exception& e) {
      return failure(req, ExecStatus::Error, std::string("malformed worker response: ") + e.what());
    }
  }
};

/// Serves the worker protocol on the given streams until EOF: one JSON
/// request per line in, one JSON result per line out.
template <class In, class Out>
void serve_worker(In& in, Out& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ExecResult r;
    try {
      r = run_request(ExecRequest::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      r.status = ExecStatus::Error;
      r.error = std::string("bad request: ") + e.what();
      try {
        r.id = nlohmann::json::parse(line).value("id", "");
      } catch (...) {
      }
    }
    out << r.to_json().dump() << "\n";
    out.flush();
  }
}

}  // namespace pcollab
