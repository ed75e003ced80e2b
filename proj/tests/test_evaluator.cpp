#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "fixtures.hpp"
#include "mbnas/errors.hpp"
#include "mbnas/evaluator.hpp"
#include "mbnas/external.hpp"
#include "mbnas/nsga2.hpp"
#include "oracles.hpp"

using namespace mbnas;
using fixture::toy_config;
using namespace std::chrono_literals;

namespace {

std::string mock(const std::string& args) { return std::string(MOCK_EVALUATOR_PATH) + " " + args; }

}  // namespace

TEST_SUITE("evaluator") {

TEST_CASE("proxy is deterministic") {
  SearchSpaceConfig c;
  const auto prof = fixture::unit_profile();
  const auto g = sample(c, 21);
  ProxyParams noisy;
  noisy.noise = 2.0;
  const auto first = evaluate_proxy(g, c, prof, 99, noisy);
  for (int i = 0; i < 1000; ++i) CHECK(evaluate_proxy(g, c, prof, 99, noisy) == first);
  CHECK(first.score >= 0.0);
  CHECK(first.score <= 100.0);
  CHECK(!(evaluate_proxy(g, c, prof, 100, noisy) == first));
}

TEST_CASE("proxy grows with capacity") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  for (int w = 0; w < 3; ++w) {
    const CellGene cell{CellOp::LightweightConv, w};
    const auto small = fixture::two_branch(c, 3, cell);
    const auto large = fixture::two_branch(c, 2, cell);
    const auto a = evaluate_proxy(small, c, prof, 0);
    const auto b = evaluate_proxy(large, c, prof, 0);
    CHECK(b.flops_g > a.flops_g);
    CHECK(b.score >= a.score);
  }
}

TEST_CASE("analytic objectives follow the cost model") {
  SearchSpaceConfig c;
  HardwareProfile prof = fixture::unit_profile();
  prof.coefficient(OpKind::MemEffSelfAttention) = 3.0;
  const auto g = sample(c, 5);
  const auto v = analytic_objectives(g, c, prof);
  const auto mc = aggregate(decode_to_ir(g, c));
  CHECK(v.flops_g == mc.flops_g());
  CHECK(v.params_m == mc.params_m());
  CHECK(v.latency_ms == estimate_latency(mc, prof));
  CHECK(v.peak_mem_mb == check_memory(mc, prof).required_mb);
}

TEST_CASE("over-budget genome is flagged, not dropped") {
  SearchSpaceConfig c;
  HardwareProfile prof = fixture::unit_profile();
  prof.memory_budget_mb = 1.0;
  const auto v = evaluate_proxy(sample(c, 3), c, prof, 0);
  CHECK(!v.feasible);
  CHECK(v.violation > 0.0);
  CHECK(v.score > 0.0);
}

TEST_CASE("request record shape") {
  const auto c = toy_config();
  const auto g = fixture::one_branch(c);
  const auto j = nlohmann::json::parse(request_line(g, RequestMeta{7, 256, 512, true}));
  CHECK(j["type"] == "eval");
  CHECK(j["id"] == 7);
  CHECK(j["input"] == nlohmann::json::array({1, 3, 256, 512}));
  CHECK(j["calibrate"] == true);
  CHECK(genome_from_json(j["genome"]) == g);
  CHECK(nlohmann::json::parse(hello_line()) == nlohmann::json({{"type", "hello"}, {"version", 1}}));
}

TEST_CASE("response parsing") {
  const auto r = parse_response(R"({"type":"result","id":3,"score":12.5,"latency_ms":4.0,"extra":1})");
  CHECK(r.id == 3);
  CHECK(r.score == 12.5);
  CHECK(r.latency_ms.value() == 4.0);
  CHECK(!r.peak_mem_mb);
  CHECK_THROWS_AS(parse_response("nope"), ProtocolError);
  CHECK_THROWS_AS(parse_response(R"({"type":"hello","version":1})"), ProtocolError);
  CHECK_THROWS_AS(parse_response(R"({"type":"result","id":3})"), ProtocolError);
  CHECK_THROWS_AS(parse_response(R"({"type":"result","id":-1,"score":1})"), ProtocolError);
}

TEST_CASE("round trip with a scripted evaluator") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  const std::string log = "mock_roundtrip.log";
  std::remove(log.c_str());
  ::setenv("MOCK_LOG", log.c_str(), 1);
  {
    ChildProcess proc(mock("echo 63.1"));
    handshake(proc, 5s);
    const auto v = evaluate_external(fixture::one_branch(c), RequestMeta{7, 256, 512, false}, proc, c, prof, 5s);
    CHECK(v.score == 63.1);
    CHECK(v.source == ObjectiveSource::External);
    CHECK(v.flops_g == analytic_objectives(fixture::one_branch(c), c, prof).flops_g);
    CHECK(proc.shutdown() == 0);
  }
  ::unsetenv("MOCK_LOG");
  std::ifstream in(log);
  std::string line;
  std::vector<std::string> types;
  while (std::getline(in, line)) types.push_back(nlohmann::json::parse(line)["type"]);
  CHECK(types == std::vector<std::string>{"hello", "eval", "shutdown"});
}

TEST_CASE("named protocol failures") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  const auto g = fixture::one_branch(c);
  const RequestMeta meta{7, 256, 512, false};
  {
    ChildProcess proc(mock("wrong-id"));
    handshake(proc, 5s);
    CHECK_THROWS_AS(evaluate_external(g, meta, proc, c, prof, 5s), ProtocolError);
  }
  {
    ChildProcess proc(mock("silent"));
    handshake(proc, 5s);
    CHECK_THROWS_AS(evaluate_external(g, meta, proc, c, prof, 200ms), Timeout);
  }
  {
    ChildProcess proc(mock("crash"));
    handshake(proc, 5s);
    CHECK_THROWS_AS(evaluate_external(g, meta, proc, c, prof, 5s), EvaluatorCrash);
  }
  {
    ChildProcess proc(mock("garbage"));
    handshake(proc, 5s);
    CHECK_THROWS_AS(evaluate_external(g, meta, proc, c, prof, 5s), ProtocolError);
  }
  {
    ChildProcess proc(mock("bad-version"));
    CHECK_THROWS_AS(handshake(proc, 5s), ProtocolError);
  }
  {
    ChildProcess proc("exit 0");
    CHECK_THROWS_AS(handshake(proc, 5s), EvaluatorError);
  }
}

TEST_CASE("worker pool keeps job order") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  const std::string space = "mock_space.json";
  std::ofstream(space) << config_to_json(c).dump();
  ExternalOptions o;
  o.workers = 3;
  o.timeout = 10s;
  ExternalEvaluator ev(mock("flops " + space), c, prof, o);
  std::vector<EvalJob> jobs;
  for (std::uint64_t i = 0; i < 24; ++i) jobs.push_back({i, sample(c, i), i});
  const auto out = ev.evaluate_batch(jobs);
  REQUIRE(out.size() == jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    CHECK(out[i].score == std::round(analytic_objectives(jobs[i].genome, c, prof).flops_g));
}

TEST_CASE("worker is replaced after a failure") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  ExternalOptions o;
  o.timeout = 200ms;
  ExternalEvaluator ev(mock("silent"), c, prof, o);
  const EvalJob job{1, fixture::one_branch(c), 0};
  CHECK_THROWS_AS(ev.evaluate(job), Timeout);
  CHECK_THROWS_AS(ev.evaluate(job), Timeout);
}

}  // TEST_SUITE
