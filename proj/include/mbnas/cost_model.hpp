#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbnas/architecture.hpp"

namespace mbnas {

/// Cost of one operator. FLOPs are multiply-accumulates (one MAC = one
/// FLOP, bias ignored); act_mem counts activation elements the operator
/// holds, including transient buffers such as an attention map.
struct OpCost {
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  std::uint64_t act_mem = 0;

  OpCost& operator+=(const OpCost& o) {
    flops += o.flops;
    params += o.params;
    act_mem += o.act_mem;
    return *this;
  }
  friend OpCost operator+(OpCost a, const OpCost& b) { return a += b; }
  friend bool operator==(const OpCost&, const OpCost&) = default;
};

OpCost conv_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t kernel, std::uint64_t height,
                 std::uint64_t width);

/// 3x3 convolution on the half-resolution (zoomed) map plus a parallel 1x1
/// convolution at full resolution. Throws OddSpatialDim.
OpCost lightweight_conv_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t height, std::uint64_t width);

/// Bottlenecked single-head self-attention without FFN: 1x1 reduce to d,
/// QKV, scores, weighted sum, output projection, 1x1 expand, plus a 1x1
/// bypass from input to output.
OpCost attention_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t d, std::uint64_t height,
                      std::uint64_t width);
inline OpCost attention_cost(std::uint64_t c_in, std::uint64_t d, std::uint64_t height, std::uint64_t width) {
  return attention_cost(c_in, c_in, d, height, width);
}

/// Standard transformer encoder block (attention + FFN of ratio
/// `ffn_ratio`) at width c; only used for the reference comparison table.
OpCost transformer_cost(std::uint64_t c, std::uint64_t height, std::uint64_t width, std::uint64_t ffn_ratio = 4);

struct OpCostEntry {
  int op_id = 0;
  OpKind kind = OpKind::Stem;
  OpCost cost;
};

struct ModelCost {
  std::uint64_t flops = 0;   // MACs
  std::uint64_t params = 0;
  std::uint64_t peak_act_mem = 0;  // elements
  std::vector<OpCostEntry> per_op;

  double flops_g() const { return static_cast<double>(flops) / 1e9; }
  double params_m() const { return static_cast<double>(params) / 1e6; }
};

/// Cost of a single IR instance.
OpCost op_cost(const OpInstance& op, int attention_dim);

ModelCost aggregate(const ArchitectureIR& ir);

struct HardwareProfile {
  /// ms per GMAC, indexed by OpKind.
  std::array<double, kOpKindCount> coefficients{};
  double overhead_ms = 0.0;
  double memory_budget_mb = std::numeric_limits<double>::infinity();
  double bytes_per_element = 4.0;
  double training_factor = 2.0;

  void validate() const;
  double coefficient(OpKind kind) const { return coefficients[static_cast<std::size_t>(kind)]; }
  double& coefficient(OpKind kind) { return coefficients[static_cast<std::size_t>(kind)]; }
};

/// Missing coefficient keys default to 0; a null or absent memory budget
/// means unlimited.
HardwareProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const HardwareProfile& p);

double estimate_latency(const ModelCost& cost, const HardwareProfile& profile);

struct MemoryCheck {
  bool pass = true;
  double required_mb = 0.0;
  double budget_mb = 0.0;
  std::string detail;
};

/// Training footprint peak * bytes_per_element * training_factor against the
/// budget (1 MB = 1e6 bytes).
MemoryCheck check_memory(const ModelCost& cost, const HardwareProfile& profile);

}  // namespace mbnas
