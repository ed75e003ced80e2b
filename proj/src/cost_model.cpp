#include "mbnas/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;

OpCost conv_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t kernel, std::uint64_t height,
                 std::uint64_t width) {
  const std::uint64_t params = kernel * kernel * c_in * c_out;
  return {params * height * width, params, c_out * height * width};
}

OpCost lightweight_conv_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t height, std::uint64_t width) {
  if (height % 2 != 0 || width % 2 != 0)
    throw OddSpatialDim("lightweight convolution needs even spatial dims, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  const auto zoomed = conv_cost(c_in, c_out, 3, height / 2, width / 2);
  const auto bypass = conv_cost(c_in, c_out, 1, height, width);
  // Bilinear resampling is free; only the full-resolution output is kept.
  return {zoomed.flops + bypass.flops, zoomed.params + bypass.params, c_out * height * width};
}

OpCost attention_cost(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t d, std::uint64_t height,
                      std::uint64_t width) {
  const std::uint64_t n = height * width;
  const std::uint64_t flops = n * c_in * d     // reduce
                              + 3 * n * d * d  // q, k, v
                              + n * n * d      // scores
                              + n * n * d      // weighted sum
                              + n * d * d      // output projection
                              + n * d * c_out  // expand
                              + n * c_in * c_out;  // bypass
  const std::uint64_t params = c_in * d + 4 * d * d + d * c_out + c_in * c_out;
  return {flops, params, c_out * n + n * n};
}

OpCost transformer_cost(std::uint64_t c, std::uint64_t height, std::uint64_t width, std::uint64_t ffn_ratio) {
  const std::uint64_t n = height * width;
  const std::uint64_t attn = 4 * n * c * c + 2 * n * n * c;
  const std::uint64_t ffn = 2 * ffn_ratio * n * c * c;
  const std::uint64_t params = 4 * c * c + 2 * ffn_ratio * c * c;
  return {attn + ffn, params, c * n + n * n + ffn_ratio * c * n};
}

OpCost op_cost(const OpInstance& op, int attention_dim) {
  const auto ci = static_cast<std::uint64_t>(op.c_in);
  const auto co = static_cast<std::uint64_t>(op.c_out);
  const auto h = static_cast<std::uint64_t>(op.height);
  const auto w = static_cast<std::uint64_t>(op.width);
  switch (op.kind) {
    case OpKind::Stem: return conv_cost(ci, co, 3, h, w);
    case OpKind::LightweightConv: return lightweight_conv_cost(ci, co, h, w);
    case OpKind::MemEffSelfAttention:
      return attention_cost(ci, co, static_cast<std::uint64_t>(attention_dim), h, w);
    case OpKind::Fuse3x3: return conv_cost(ci, co, 3, h, w);
    case OpKind::SlimConv1x1: return conv_cost(ci, co, 1, h, w);
    case OpKind::Upsample:
    case OpKind::Downsample: return {0, 0, co * h * w};
  }
  return {};
}

ModelCost aggregate(const ArchitectureIR& ir) {
  ModelCost total;
  total.per_op.reserve(ir.ops.size());
  for (const auto& op : ir.ops) {
    const auto c = op_cost(op, ir.attention_dim);
    total.per_op.push_back({op.id, op.kind, c});
    total.flops += c.flops;
    total.params += c.params;
  }

  // Topological sweep: an output stays live until its last consumer has run.
  std::vector<int> pending(ir.ops.size(), 0);
  std::vector<std::vector<int>> inputs(ir.ops.size());
  for (const auto& [from, to] : ir.edges) {
    ++pending[static_cast<std::size_t>(from)];
    inputs[static_cast<std::size_t>(to)].push_back(from);
  }
  std::uint64_t live = 0;
  for (const auto& op : ir.ops) {
    const auto i = static_cast<std::size_t>(op.id);
    const std::uint64_t out = static_cast<std::uint64_t>(op.c_out) * static_cast<std::uint64_t>(op.height) *
                              static_cast<std::uint64_t>(op.width);
    const std::uint64_t transient = total.per_op[i].cost.act_mem - std::min(total.per_op[i].cost.act_mem, out);
    live += out;
    total.peak_act_mem = std::max(total.peak_act_mem, live + transient);
    for (int src : inputs[i]) {
      const auto s = static_cast<std::size_t>(src);
      if (--pending[s] == 0) {
        const auto& p = ir.ops[s];
        live -= static_cast<std::uint64_t>(p.c_out) * static_cast<std::uint64_t>(p.height) *
                static_cast<std::uint64_t>(p.width);
      }
    }
    if (pending[i] == 0 && op.id != ir.output_id) live -= out;
  }
  return total;
}

// --- hardware profile -------------------------------------------------------

void HardwareProfile::validate() const {
  for (double c : coefficients)
    if (!(c >= 0.0)) throw InvalidConfig("latency coefficients must be >= 0");
  if (!(overhead_ms >= 0.0)) throw InvalidConfig("overhead_ms must be >= 0");
  if (!(memory_budget_mb > 0.0)) throw InvalidConfig("memory_budget_mb must be > 0");
  if (!(bytes_per_element > 0.0)) throw InvalidConfig("bytes_per_element must be > 0");
  if (!(training_factor > 0.0)) throw InvalidConfig("training_factor must be > 0");
}

HardwareProfile profile_from_json(const json& j) {
  HardwareProfile p;
  if (j.contains("coefficients")) {
    for (const auto& [name, value] : j.at("coefficients").items())
      p.coefficient(op_kind_from_string(name)) = value.get<double>();
  }
  if (j.contains("overhead_ms")) p.overhead_ms = j.at("overhead_ms").get<double>();
  if (j.contains("memory_budget_mb") && !j.at("memory_budget_mb").is_null())
    p.memory_budget_mb = j.at("memory_budget_mb").get<double>();
  if (j.contains("bytes_per_element")) p.bytes_per_element = j.at("bytes_per_element").get<double>();
  if (j.contains("training_factor")) p.training_factor = j.at("training_factor").get<double>();
  p.validate();
  return p;
}

json profile_to_json(const HardwareProfile& p) {
  json coeff = json::object();
  for (int k = 0; k < kOpKindCount; ++k) coeff[to_string(static_cast<OpKind>(k))] = p.coefficients[static_cast<std::size_t>(k)];
  return json{{"coefficients", coeff},
              {"overhead_ms", p.overhead_ms},
              {"memory_budget_mb", std::isinf(p.memory_budget_mb) ? json(nullptr) : json(p.memory_budget_mb)},
              {"bytes_per_element", p.bytes_per_element},
              {"training_factor", p.training_factor}};
}

double estimate_latency(const ModelCost& cost, const HardwareProfile& profile) {
  double ms = 0.0;
  for (const auto& e : cost.per_op)
    ms += static_cast<double>(e.cost.flops) / 1e9 * profile.coefficient(e.kind) + profile.overhead_ms;
  return ms;
}

MemoryCheck check_memory(const ModelCost& cost, const HardwareProfile& profile) {
  MemoryCheck m;
  m.required_mb = static_cast<double>(cost.peak_act_mem) * profile.bytes_per_element * profile.training_factor / 1e6;
  m.budget_mb = profile.memory_budget_mb;
  m.pass = !(m.required_mb > m.budget_mb);
  std::ostringstream os;
  os << "training memory " << m.required_mb << " MB " << (m.pass ? "<=" : ">") << " budget " << m.budget_mb
     << " MB";
  m.detail = os.str();
  return m;
}

}  // namespace mbnas
