#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mbnas/errors.hpp"
#include "mbnas/search_space.hpp"

namespace mbnas {

enum class OpKind : std::uint8_t {
  Stem,
  LightweightConv,
  MemEffSelfAttention,
  Fuse3x3,
  SlimConv1x1,
  Upsample,
  Downsample,
};

inline constexpr int kOpKindCount = 7;

const char* to_string(OpKind kind);
/// Throws InvalidConfig for unknown names.
OpKind op_kind_from_string(const std::string& name);

struct OpInstance {
  int id = 0;
  OpKind kind = OpKind::Stem;
  int layer = -1;  // -1 for stem and head instances
  int row = -1;    // stride row, -1 for stem
  int stride = 1;  // output stride
  int c_in = 0;
  int c_out = 0;
  int height = 0;  // output spatial size
  int width = 0;
  bool head = false;
};

/// Explicit layer graph of one sub-network. `ops` is in topological order;
/// every edge goes from a lower id to a higher id.
struct ArchitectureIR {
  std::vector<OpInstance> ops;
  std::vector<std::pair<int, int>> edges;  // (source id, target id)
  int head_index = 0;
  int attention_dim = 48;
  int input_height = 0;
  int input_width = 0;
  int output_id = -1;

  int add(OpInstance op);
  void connect(int from, int to) { edges.emplace_back(from, to); }
  std::vector<int> predecessors(int id) const;
};

/// Throws ConstraintViolation when validate() reports anything.
ArchitectureIR decode_to_ir(const Genome& genome, const SearchSpaceConfig& config);

class ConstraintViolation : public Error {
public:
  explicit ConstraintViolation(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

private:
  std::vector<Violation> violations_;
};

}  // namespace mbnas
