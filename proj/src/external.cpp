#include "mbnas/external.hpp"

#include <atomic>
#include <cmath>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <exception>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// --- child process ----------------------------------------------------------

ChildProcess::ChildProcess(const std::string& command) {
  // A dead evaluator must surface as EPIPE, not kill the engine.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw EvaluatorCrash(std::string("pipe: ") + std::strerror(errno));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw EvaluatorCrash(std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) throw EvaluatorCrash(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ChildProcess::~ChildProcess() {
  shutdown(std::chrono::milliseconds(500));
  if (from_child_ >= 0) ::close(from_child_);
}

void ChildProcess::send(const std::string& line) {
  if (to_child_ < 0) throw EvaluatorCrash("evaluator input already closed");
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorCrash(std::string("evaluator stream closed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ChildProcess::receive(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (from_child_ < 0) throw EvaluatorCrash("evaluator output closed");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) throw Timeout("no response from evaluator within " + std::to_string(timeout.count()) + " ms");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorCrash(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EvaluatorCrash(std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw EvaluatorCrash("evaluator closed its output stream");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

int ChildProcess::shutdown(std::chrono::milliseconds grace) {
  if (reaped_) return status_;
  if (to_child_ >= 0) {
    try {
      send(shutdown_line());
    } catch (const EvaluatorError&) {
    }
    ::close(to_child_);
    to_child_ = -1;
  }
  const auto deadline = Clock::now() + grace;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) break;
    if (r < 0) {
      reaped_ = true;
      return status_;
    }
    if (Clock::now() >= deadline) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  reaped_ = true;
  status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return status_;
}

// --- protocol ---------------------------------------------------------------

std::string hello_line() { return json{{"type", "hello"}, {"version", kProtocolVersion}}.dump(); }

std::string shutdown_line() { return json{{"type", "shutdown"}}.dump(); }

std::string request_line(const Genome& genome, const RequestMeta& meta) {
  return json{{"type", "eval"},
              {"id", meta.id},
              {"genome", genome_to_json(genome)},
              {"input", {1, 3, meta.input_height, meta.input_width}},
              {"calibrate", meta.calibrate}}
      .dump();
}

namespace {

json parse_record(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("malformed record: " + line.substr(0, 200));
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("record without type: " + line.substr(0, 200));
  return j;
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw ProtocolError(std::string(key) + " must be a number or null");
  return j[key].get<double>();
}

}  // namespace

EvalResponse parse_response(const std::string& line) {
  const json j = parse_record(line);
  if (j["type"] != "result") throw ProtocolError("expected a result record, got type " + j["type"].dump());
  if (!j.contains("id") || !j["id"].is_number_unsigned()) throw ProtocolError("result id must be an unsigned integer");
  if (!j.contains("score") || !j["score"].is_number()) throw ProtocolError("result score must be a number");
  EvalResponse r;
  r.id = j["id"].get<std::uint64_t>();
  r.score = j["score"].get<double>();
  r.latency_ms = optional_number(j, "latency_ms");
  r.peak_mem_mb = optional_number(j, "peak_mem_mb");
  return r;
}

void handshake(LineChannel& channel, std::chrono::milliseconds timeout) {
  channel.send(hello_line());
  const json j = parse_record(channel.receive(timeout));
  if (j["type"] != "hello") throw ProtocolError("expected hello, got type " + j["type"].dump());
  if (!j.contains("version") || j["version"] != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " + (j.contains("version") ? j["version"].dump() : "none"));
}

ObjectiveVector evaluate_external(const Genome& genome, const RequestMeta& meta, LineChannel& channel,
                                  const SearchSpaceConfig& config, const HardwareProfile& profile,
                                  std::chrono::milliseconds timeout) {
  auto v = analytic_objectives(genome, config, profile);
  channel.send(request_line(genome, meta));
  const auto r = parse_response(channel.receive(timeout));
  if (r.id != meta.id)
    throw ProtocolError("response id " + std::to_string(r.id) + " does not match request id " + std::to_string(meta.id));
  if (!std::isfinite(r.score)) throw ProtocolError("non-finite score");
  v.score = r.score;
  if (r.latency_ms) v.latency_ms = *r.latency_ms;
  if (r.peak_mem_mb) {
    v.peak_mem_mb = *r.peak_mem_mb;
    v.feasible = !(v.peak_mem_mb > profile.memory_budget_mb);
    v.violation = v.feasible ? 0.0 : v.peak_mem_mb - profile.memory_budget_mb;
  }
  v.source = ObjectiveSource::External;
  return v;
}

// --- pool -------------------------------------------------------------------

ExternalEvaluator::ExternalEvaluator(std::string command, SearchSpaceConfig config, HardwareProfile profile,
                                     ExternalOptions options)
    : command_(std::move(command)), config_(std::move(config)), profile_(profile), options_(options) {
  if (options_.workers < 1) throw InvalidConfig("external evaluator needs at least one worker");
  workers_.resize(static_cast<std::size_t>(options_.workers));
}

ExternalEvaluator::~ExternalEvaluator() = default;

ObjectiveVector ExternalEvaluator::run_on(std::size_t worker, const EvalJob& job) {
  auto& proc = workers_[worker];
  if (!proc) {
    proc = std::make_unique<ChildProcess>(command_);
    try {
      handshake(*proc, options_.timeout);
    } catch (...) {
      proc.reset();
      throw;
    }
  }
  const RequestMeta meta{job.id, config_.input_height, config_.input_width, options_.calibrate};
  try {
    return evaluate_external(job.genome, meta, *proc, config_, profile_, options_.timeout);
  } catch (...) {
    // The stream may hold a late or partial reply; never reuse it.
    proc.reset();
    throw;
  }
}

ObjectiveVector ExternalEvaluator::evaluate(const EvalJob& job) { return run_on(0, job); }

std::vector<ObjectiveVector> ExternalEvaluator::evaluate_batch(std::span<const EvalJob> jobs) {
  std::vector<ObjectiveVector> out(jobs.size());
  const std::size_t n_threads = std::min(workers_.size(), jobs.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = run_on(0, jobs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(n_threads);
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t w = 0; w < n_threads; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < jobs.size() && !failed; i = next++) out[i] = run_on(w, jobs[i]);
      } catch (...) {
        errors[w] = std::current_exception();
        failed = true;
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mbnas
