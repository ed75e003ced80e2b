#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbnas/cost_model.hpp"
#include "mbnas/search_space.hpp"

namespace mbnas {

enum class ObjectiveSource : std::uint8_t { Proxy, External };

struct ObjectiveVector {
  double score = 0.0;  // maximize, [0, 100]
  double latency_ms = 0.0;
  double flops_g = 0.0;
  double params_m = 0.0;
  double peak_mem_mb = 0.0;  // training footprint compared against the budget
  bool feasible = true;
  double violation = 0.0;  // MB over budget when infeasible
  ObjectiveSource source = ObjectiveSource::Proxy;

  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

nlohmann::json objectives_to_json(const ObjectiveVector& v);

enum class MinimizeAxis : std::uint8_t { Latency, Flops, Params };

const char* to_string(MinimizeAxis axis);
/// "latency" | "flops" | "params"; throws InvalidConfig.
MinimizeAxis minimize_axis_from_string(const std::string& s);

/// Score is always the maximized axis; one cost axis is minimized.
struct ObjectivePair {
  MinimizeAxis axis = MinimizeAxis::Latency;

  double minimized(const ObjectiveVector& v) const {
    switch (axis) {
      case MinimizeAxis::Latency: return v.latency_ms;
      case MinimizeAxis::Flops: return v.flops_g;
      case MinimizeAxis::Params: return v.params_m;
    }
    return v.latency_ms;
  }
};

/// Cost-model objectives for a genome; score left at 0. Throws
/// ConstraintViolation for invalid genomes.
ObjectiveVector analytic_objectives(const Genome& genome, const SearchSpaceConfig& config,
                                    const HardwareProfile& profile);

/// Synthetic accuracy surrogate:
///   score = 100 * sigmoid(a*log1p(flops_g) + b*depth + c*placement + bias)
///           + noise * U(-1, 1)
/// depth = active cells - 2L. placement = (attention cells on the preferred
/// row - 0.5 * attention cells elsewhere) / active cells, where the preferred
/// row is the coarsest active row for multi-branch genomes and the stride-8
/// row otherwise. Not an accuracy model; only a deterministic, capacity
/// monotone signal for exercising the search.
struct ProxyParams {
  double a = 0.35;
  double b = 0.05;
  double c = 3.0;
  double bias = -0.4;
  double noise = 0.0;
};

ObjectiveVector evaluate_proxy(const Genome& genome, const SearchSpaceConfig& config,
                               const HardwareProfile& profile, std::uint64_t seed,
                               const ProxyParams& params = {});

struct EvalJob {
  std::uint64_t id = 0;
  Genome genome;
  std::uint64_t seed = 0;
};

class Evaluator {
public:
  virtual ~Evaluator() = default;

  virtual ObjectiveVector evaluate(const EvalJob& job) = 0;

  /// Results are returned in job order regardless of completion order.
  virtual std::vector<ObjectiveVector> evaluate_batch(std::span<const EvalJob> jobs);
};

class ProxyEvaluator final : public Evaluator {
public:
  ProxyEvaluator(SearchSpaceConfig config, HardwareProfile profile, ProxyParams params = {})
      : config_(std::move(config)), profile_(profile), params_(params) {}

  ObjectiveVector evaluate(const EvalJob& job) override {
    return evaluate_proxy(job.genome, config_, profile_, job.seed, params_);
  }

private:
  SearchSpaceConfig config_;
  HardwareProfile profile_;
  ProxyParams params_;
};

}  // namespace mbnas
