// Scripted evaluator process for protocol tests.
//
//   mock_evaluator echo <score>        answer every request with <score>
//   mock_evaluator flops <space.json>  score = round(flops_g) of the genome
//   mock_evaluator wrong-id            answer with id + 1
//   mock_evaluator silent              handshake, then never answer
//   mock_evaluator crash               handshake, then exit on the first request
//   mock_evaluator bad-version         reply to hello with version 2
//   mock_evaluator garbage             answer requests with a non-JSON line
//
// MOCK_LOG=<path> appends every received line to <path>.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "mbnas/evaluator.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: mock_evaluator <mode> [arg]\n";
    return 2;
  }
  const std::string mode = argv[1];
  const char* log_path = std::getenv("MOCK_LOG");
  std::ofstream log;
  if (log_path) log.open(log_path, std::ios::app);

  std::optional<mbnas::SearchSpaceConfig> config;
  if (mode == "flops") {
    std::ifstream in(argv[2]);
    config = mbnas::config_from_json(json::parse(in));
  }
  const mbnas::HardwareProfile profile;

  std::string line;
  while (std::getline(std::cin, line)) {
    if (log) log << line << "\n" << std::flush;
    const json msg = json::parse(line);
    const std::string type = msg.at("type");
    if (type == "hello") {
      std::cout << json{{"type", "hello"}, {"version", mode == "bad-version" ? 2 : 1}}.dump() << std::endl;
      continue;
    }
    if (type == "shutdown") return 0;
    if (type != "eval") continue;

    const std::uint64_t id = msg.at("id");
    if (mode == "silent") continue;
    if (mode == "crash") std::_Exit(1);
    if (mode == "garbage") {
      std::cout << "this is not a record" << std::endl;
      continue;
    }
    double score = 0.0;
    if (mode == "echo") {
      score = std::stod(argv[2]);
    } else if (mode == "flops") {
      const auto genome = mbnas::genome_from_json(msg.at("genome"));
      score = std::round(mbnas::analytic_objectives(genome, *config, profile).flops_g);
    }
    const std::uint64_t reply_id = mode == "wrong-id" ? id + 1 : id;
    std::cout << json{{"type", "result"}, {"id", reply_id}, {"score", score}, {"latency_ms", nullptr},
                      {"peak_mem_mb", nullptr}}
                     .dump()
              << std::endl;
  }
  return 0;
}
