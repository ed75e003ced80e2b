#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

#include "mbnas/evaluator.hpp"

namespace mbnas {

// Line-delimited JSON protocol (version 1) spoken with an evaluator process
// over its stdin/stdout:
//   engine -> {"type":"hello","version":1}        <- {"type":"hello","version":1}
//   engine -> {"type":"eval","id":7,"genome":{...},"input":[1,3,H,W],"calibrate":false}
//          <- {"type":"result","id":7,"score":63.1,"latency_ms":null,"peak_mem_mb":null}
//   engine -> {"type":"shutdown"}
// Unknown fields are ignored.

inline constexpr int kProtocolVersion = 1;

class LineChannel {
public:
  virtual ~LineChannel() = default;
  /// Throws EvaluatorCrash if the peer is gone.
  virtual void send(const std::string& line) = 0;
  /// Next line without its terminator. Throws Timeout or EvaluatorCrash.
  virtual std::string receive(std::chrono::milliseconds timeout) = 0;
};

/// `/bin/sh -c command` with stdin/stdout attached as a LineChannel. The
/// destructor sends shutdown, closes stdin and reaps the child (killing it
/// if it lingers).
class ChildProcess final : public LineChannel {
public:
  explicit ChildProcess(const std::string& command);
  ~ChildProcess() override;

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void send(const std::string& line) override;
  std::string receive(std::chrono::milliseconds timeout) override;

  /// Sends shutdown and waits for exit; returns the exit status or -1.
  int shutdown(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));
  pid_t pid() const { return pid_; }

private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool reaped_ = false;
  int status_ = -1;
};

struct RequestMeta {
  std::uint64_t id = 0;
  int input_height = 256;
  int input_width = 512;
  bool calibrate = false;
};

struct EvalResponse {
  std::uint64_t id = 0;
  double score = 0.0;
  std::optional<double> latency_ms;
  std::optional<double> peak_mem_mb;
};

std::string hello_line();
std::string shutdown_line();
std::string request_line(const Genome& genome, const RequestMeta& meta);
/// Throws ProtocolError on malformed records.
EvalResponse parse_response(const std::string& line);

/// Exchanges hello records; throws ProtocolError on a bad reply.
void handshake(LineChannel& channel, std::chrono::milliseconds timeout);

/// One request, one matching response. Measured latency / peak memory from
/// the response replace the profile estimates.
ObjectiveVector evaluate_external(const Genome& genome, const RequestMeta& meta, LineChannel& channel,
                                  const SearchSpaceConfig& config, const HardwareProfile& profile,
                                  std::chrono::milliseconds timeout);

struct ExternalOptions {
  int workers = 1;
  std::chrono::milliseconds timeout{300'000};
  bool calibrate = true;
};

/// Pool of evaluator processes, one request in flight per process.
class ExternalEvaluator final : public Evaluator {
public:
  ExternalEvaluator(std::string command, SearchSpaceConfig config, HardwareProfile profile,
                    ExternalOptions options = {});
  ~ExternalEvaluator() override;

  ObjectiveVector evaluate(const EvalJob& job) override;
  std::vector<ObjectiveVector> evaluate_batch(std::span<const EvalJob> jobs) override;

private:
  ObjectiveVector run_on(std::size_t worker, const EvalJob& job);

  std::string command_;
  SearchSpaceConfig config_;
  HardwareProfile profile_;
  ExternalOptions options_;
  std::vector<std::unique_ptr<ChildProcess>> workers_;
};

}  // namespace mbnas
