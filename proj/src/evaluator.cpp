#include "mbnas/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "mbnas/architecture.hpp"
#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;

json objectives_to_json(const ObjectiveVector& v) {
  return json{{"score", v.score},
              {"latency_ms", v.latency_ms},
              {"flops_g", v.flops_g},
              {"params_m", v.params_m},
              {"peak_mem_mb", v.peak_mem_mb},
              {"feasible", v.feasible},
              {"violation", v.violation},
              {"source", v.source == ObjectiveSource::Proxy ? "proxy" : "external"}};
}

const char* to_string(MinimizeAxis axis) {
  switch (axis) {
    case MinimizeAxis::Latency: return "latency";
    case MinimizeAxis::Flops: return "flops";
    case MinimizeAxis::Params: return "params";
  }
  return "latency";
}

MinimizeAxis minimize_axis_from_string(const std::string& s) {
  if (s == "latency") return MinimizeAxis::Latency;
  if (s == "flops") return MinimizeAxis::Flops;
  if (s == "params") return MinimizeAxis::Params;
  throw InvalidConfig("objective must be latency, flops or params, got '" + s + "'");
}

ObjectiveVector analytic_objectives(const Genome& genome, const SearchSpaceConfig& config,
                                    const HardwareProfile& profile) {
  const auto cost = aggregate(decode_to_ir(genome, config));
  const auto mem = check_memory(cost, profile);
  ObjectiveVector v;
  v.latency_ms = estimate_latency(cost, profile);
  v.flops_g = cost.flops_g();
  v.params_m = cost.params_m();
  v.peak_mem_mb = mem.required_mb;
  v.feasible = mem.pass;
  v.violation = mem.pass ? 0.0 : mem.required_mb - mem.budget_mb;
  return v;
}

ObjectiveVector evaluate_proxy(const Genome& genome, const SearchSpaceConfig& config,
                               const HardwareProfile& profile, std::uint64_t seed, const ProxyParams& params) {
  auto v = analytic_objectives(genome, config, profile);

  const int L = config.num_layers;
  const int preferred = genome.branch_count > 1 ? genome.branch_count - 1 : 0;
  int active = 0;
  int attn_preferred = 0;
  int attn_other = 0;
  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < kRows; ++r) {
      const auto& c = genome.cell(l, r);
      if (!c) continue;
      ++active;
      if (c->op == CellOp::MemEffSelfAttention) (r == preferred ? attn_preferred : attn_other) += 1;
    }
  }
  const double depth = static_cast<double>(active - 2 * L);
  const double placement = (attn_preferred - 0.5 * attn_other) / static_cast<double>(active);
  const double x = params.a * std::log1p(v.flops_g) + params.b * depth + params.c * placement + params.bias;
  double score = 100.0 / (1.0 + std::exp(-x));
  if (params.noise != 0.0) {
    Rng rng(seed);
    score += params.noise * (2.0 * rng.uniform() - 1.0);
  }
  v.score = std::clamp(score, 0.0, 100.0);
  v.source = ObjectiveSource::Proxy;
  return v;
}

std::vector<ObjectiveVector> Evaluator::evaluate_batch(std::span<const EvalJob> jobs) {
  std::vector<ObjectiveVector> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(evaluate(job));
  return out;
}

}  // namespace mbnas
