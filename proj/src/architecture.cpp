#include "mbnas/architecture.hpp"

#include <array>
#include <optional>

#include "mbnas/errors.hpp"

namespace mbnas {

namespace {

constexpr std::array<const char*, kOpKindCount> kOpNames{
    "Stem", "LightweightConv", "MemEffSelfAttention", "Fuse3x3", "SlimConv1x1", "Upsample", "Downsample"};

std::string join_violations(const std::vector<Violation>& vs) {
  std::string s = "genome violates constraints:";
  for (const auto& v : vs) s += " [" + describe(v) + "]";
  return s;
}

}  // namespace

const char* to_string(OpKind kind) { return kOpNames[static_cast<std::size_t>(kind)]; }

OpKind op_kind_from_string(const std::string& name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (name == kOpNames[i]) return static_cast<OpKind>(i);
  throw InvalidConfig("unknown operator kind '" + name + "'");
}

ConstraintViolation::ConstraintViolation(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

int ArchitectureIR::add(OpInstance op) {
  op.id = static_cast<int>(ops.size());
  ops.push_back(op);
  return op.id;
}

std::vector<int> ArchitectureIR::predecessors(int id) const {
  std::vector<int> out;
  for (const auto& [from, to] : edges)
    if (to == id) out.push_back(from);
  return out;
}

ArchitectureIR decode_to_ir(const Genome& g, const SearchSpaceConfig& config) {
  if (auto vs = validate(g, config); !vs.empty()) throw ConstraintViolation(std::move(vs));

  const int L = config.num_layers;
  const int H = config.input_height;
  const int W = config.input_width;
  ArchitectureIR ir;
  ir.head_index = g.head_index;
  ir.attention_dim = config.attention_dim;
  ir.input_height = H;
  ir.input_width = W;

  // Stem: two stride-2 3x3 convolutions, then resample to stride 8.
  const int half = config.base_channels / 2;
  const int s1 = ir.add({0, OpKind::Stem, -1, -1, 2, 3, half, H / 2, W / 2, false});
  const int s2 = ir.add({0, OpKind::Stem, -1, -1, 4, half, config.base_channels, H / 4, W / 4, false});
  ir.connect(s1, s2);
  const int stem_out = ir.add({0, OpKind::Downsample, -1, 0, 8, config.base_channels, config.base_channels,
                               config.row_height(0), config.row_width(0), false});
  ir.connect(s2, stem_out);

  // Output instance id of each active cell of the previous layer.
  std::array<std::optional<int>, kRows> prev{};

  for (int l = 0; l < L; ++l) {
    std::array<std::optional<int>, kRows> cur{};
    for (int r = 0; r < kRows; ++r) {
      if (!g.active(l, r)) continue;
      const int stride = config.stride_rows[r];
      const int h = config.row_height(r);
      const int w = config.row_width(r);
      const auto& cell = *g.cell(l, r);
      const int c_out = config.channels(r, cell.width_index);

      std::vector<int> sources;  // instances at this row's resolution
      if (l == 0) {
        sources.push_back(stem_out);
      } else {
        const auto node = g.node(l, r);
        if (node.has(Edge::SameRow)) sources.push_back(*prev[r]);
        if (node.has(Edge::FromHigherRes)) {
          const auto& src = ir.ops[static_cast<std::size_t>(*prev[r - 1])];
          const int d = ir.add({0, OpKind::Downsample, l, r, stride, src.c_out, src.c_out, h, w, false});
          ir.connect(src.id, d);
          sources.push_back(d);
        }
        if (node.has(Edge::FromLowerRes)) {
          const auto& src = ir.ops[static_cast<std::size_t>(*prev[r + 1])];
          const int u = ir.add({0, OpKind::Upsample, l, r, stride, src.c_out, src.c_out, h, w, false});
          ir.connect(src.id, u);
          sources.push_back(u);
        }
      }

      int input = sources.front();
      int c_in = ir.ops[static_cast<std::size_t>(input)].c_out;
      if (sources.size() > 1) {
        int concat = 0;
        for (int s : sources) concat += ir.ops[static_cast<std::size_t>(s)].c_out;
        input = ir.add({0, OpKind::Fuse3x3, l, r, stride, concat, c_out, h, w, false});
        for (int s : sources) ir.connect(s, input);
        c_in = c_out;
      }
      const auto kind = cell.op == CellOp::LightweightConv ? OpKind::LightweightConv : OpKind::MemEffSelfAttention;
      const int id = ir.add({0, kind, l, r, stride, c_in, c_out, h, w, false});
      ir.connect(input, id);
      cur[static_cast<std::size_t>(r)] = id;
    }
    prev = cur;
  }

  // Head: slim each selected row to head_channels, upsample to the finest
  // selected resolution, concatenate, fuse.
  const auto mask = kHeadRowMasks[static_cast<std::size_t>(g.head_index)];
  int finest = -1;
  for (int r = 0; r < kRows && finest < 0; ++r)
    if (mask & (1u << r)) finest = r;
  const int fh = config.row_height(finest);
  const int fw = config.row_width(finest);
  const int C = config.head_channels;
  std::vector<int> branches;
  for (int r = 0; r < kRows; ++r) {
    if (!(mask & (1u << r))) continue;
    const auto& src = ir.ops[static_cast<std::size_t>(*prev[r])];
    const int slim = ir.add({0, OpKind::SlimConv1x1, -1, r, config.stride_rows[r], src.c_out, C,
                             config.row_height(r), config.row_width(r), true});
    ir.connect(src.id, slim);
    int out = slim;
    if (r != finest) {
      out = ir.add({0, OpKind::Upsample, -1, finest, config.stride_rows[finest], C, C, fh, fw, true});
      ir.connect(slim, out);
    }
    branches.push_back(out);
  }
  const int fuse = ir.add({0, OpKind::Fuse3x3, -1, finest, config.stride_rows[finest],
                           C * static_cast<int>(branches.size()), C, fh, fw, true});
  for (int b : branches) ir.connect(b, fuse);
  ir.output_id = fuse;
  return ir;
}

}  // namespace mbnas
