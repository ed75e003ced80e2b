#include "mbnas/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;

std::vector<int> head_strides(int head_index) {
  static constexpr std::array<int, kRows> strides{8, 16, 32};
  std::vector<int> out;
  const auto mask = kHeadRowMasks.at(static_cast<std::size_t>(head_index));
  for (int r = 0; r < kRows; ++r)
    if (mask & (1u << r)) out.push_back(strides[r]);
  return out;
}

// --- config ----------------------------------------------------------------

void SearchSpaceConfig::validate() const {
  if (num_layers < 2) throw InvalidConfig("num_layers must be >= 2");
  if (stride_rows != std::array<int, kRows>{8, 16, 32})
    throw InvalidConfig("stride_rows must be exactly [8, 16, 32]");
  if (width_multipliers.empty()) throw InvalidConfig("width_multipliers must not be empty");
  for (int w : width_multipliers)
    if (w < 1) throw InvalidConfig("width multipliers must be positive");
  if (base_channels < 2 || base_channels % 2 != 0)
    throw InvalidConfig("base_channels must be an even integer >= 2");
  if (attention_dim < 1) throw InvalidConfig("attention_dim must be >= 1");
  if (head_channels < 1) throw InvalidConfig("head_channels must be >= 1");
  // Lightweight convolution halves each row's resolution, so the stride-32
  // map must still have even sides.
  if (input_height < 64 || input_width < 64 || input_height % 64 != 0 || input_width % 64 != 0)
    throw InvalidConfig("input height and width must be positive multiples of 64");

  double sum = 0.0;
  for (double p : branch_priors) {
    if (!(p >= 0.0)) throw InvalidConfig("branch_priors must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("branch_priors must sum to 1");
  const int max_b = max_branches();
  for (int b = max_b; b < kRows; ++b)
    if (branch_priors[b] != 0.0)
      throw InvalidConfig("branch_priors give mass to a branch count that does not fit num_layers");
  for (int b = 1; b < max_b; ++b)
    if (branch_priors[b - 1] > branch_priors[b])
      throw InvalidConfig("branch_priors must favour more branches (rho1 <= rho2 <= rho3)");
}

int SearchSpaceConfig::channels(int row, int width_index) const {
  return width_multipliers.at(static_cast<std::size_t>(width_index)) * (stride_rows[row] / 8);
}

SearchSpaceConfig config_from_json(const json& j) {
  SearchSpaceConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  if (j.contains("stride_rows")) {
    const auto rows = j.at("stride_rows").get<std::vector<int>>();
    if (rows.size() != kRows) throw InvalidConfig("stride_rows must have exactly 3 entries");
    std::copy(rows.begin(), rows.end(), c.stride_rows.begin());
  }
  if (j.contains("width_multipliers")) c.width_multipliers = j.at("width_multipliers").get<std::vector<int>>();
  if (j.contains("base_channels")) c.base_channels = j.at("base_channels").get<int>();
  if (j.contains("branch_priors")) {
    const auto p = j.at("branch_priors").get<std::vector<double>>();
    if (p.size() != kRows) throw InvalidConfig("branch_priors must have exactly 3 entries");
    std::copy(p.begin(), p.end(), c.branch_priors.begin());
  }
  if (j.contains("input")) {
    const auto in = j.at("input").get<std::vector<int>>();
    if (in.size() != 2) throw InvalidConfig("input must be [height, width]");
    c.input_height = in[0];
    c.input_width = in[1];
  }
  if (j.contains("attention_dim")) c.attention_dim = j.at("attention_dim").get<int>();
  if (j.contains("head_channels")) c.head_channels = j.at("head_channels").get<int>();
  c.validate();
  return c;
}

json config_to_json(const SearchSpaceConfig& c) {
  return json{{"num_layers", c.num_layers},
              {"stride_rows", c.stride_rows},
              {"width_multipliers", c.width_multipliers},
              {"base_channels", c.base_channels},
              {"branch_priors", c.branch_priors},
              {"input", {c.input_height, c.input_width}},
              {"attention_dim", c.attention_dim},
              {"head_channels", c.head_channels}};
}

// --- genome ----------------------------------------------------------------

Genome Genome::empty(const SearchSpaceConfig& config) {
  Genome g;
  g.cells.assign(static_cast<std::size_t>(config.num_layers * kRows), std::nullopt);
  g.nodes.assign(static_cast<std::size_t>((config.num_layers - 1) * kRows), NodeGene{});
  return g;
}

int Genome::row_start(int row) const {
  if (row == 0) return branch_count >= 1 ? 0 : -1;
  if (row >= branch_count) return -1;
  return downsample_layers[static_cast<std::size_t>(row - 1)];
}

namespace {

const char* op_name(CellOp op) {
  return op == CellOp::LightweightConv ? "conv" : "attn";
}

CellOp op_from_name(const std::string& s) {
  if (s == "conv") return CellOp::LightweightConv;
  if (s == "attn") return CellOp::MemEffSelfAttention;
  throw StructureMismatch("unknown cell operator '" + s + "'");
}

constexpr std::array<std::pair<Edge, const char*>, 3> kEdgeNames{
    {{Edge::SameRow, "same"}, {Edge::FromHigherRes, "higher"}, {Edge::FromLowerRes, "lower"}}};

}  // namespace

json genome_to_json(const Genome& g) {
  json cells = json::array();
  for (const auto& c : g.cells) {
    if (c)
      cells.push_back({{"op", op_name(c->op)}, {"width", c->width_index}});
    else
      cells.push_back(nullptr);
  }
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    if (n.empty()) {
      nodes.push_back(nullptr);
      continue;
    }
    json edges = json::array();
    for (const auto& [e, name] : kEdgeNames)
      if (n.has(e)) edges.push_back(name);
    nodes.push_back(std::move(edges));
  }
  json ds = json::array();
  for (int d : g.downsample_layers) ds.push_back(d == 0 ? json(nullptr) : json(d));
  return json{{"branch_count", g.branch_count},
              {"downsample_layers", std::move(ds)},
              {"cells", std::move(cells)},
              {"nodes", std::move(nodes)},
              {"head_index", g.head_index}};
}

Genome genome_from_json(const json& j) {
  Genome g;
  g.branch_count = j.at("branch_count").get<int>();
  const auto& ds = j.at("downsample_layers");
  if (!ds.is_array() || ds.size() != 2) throw StructureMismatch("downsample_layers must have 2 entries");
  for (std::size_t i = 0; i < 2; ++i) g.downsample_layers[i] = ds[i].is_null() ? 0 : ds[i].get<int>();
  for (const auto& c : j.at("cells")) {
    if (c.is_null())
      g.cells.emplace_back(std::nullopt);
    else
      g.cells.emplace_back(CellGene{op_from_name(c.at("op").get<std::string>()), c.at("width").get<int>()});
  }
  for (const auto& n : j.at("nodes")) {
    NodeGene node;
    if (!n.is_null()) {
      for (const auto& e : n) {
        const auto name = e.get<std::string>();
        const auto it = std::find_if(kEdgeNames.begin(), kEdgeNames.end(),
                                     [&](const auto& p) { return name == p.second; });
        if (it == kEdgeNames.end()) throw StructureMismatch("unknown edge '" + name + "'");
        node.edges |= static_cast<std::uint8_t>(it->first);
      }
    }
    g.nodes.push_back(node);
  }
  g.head_index = j.at("head_index").get<int>();
  return g;
}

// --- constraints -----------------------------------------------------------

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::PathCountZero: return "PathCountZero";
    case ViolationKind::BranchCountOutOfRange: return "BranchCountOutOfRange";
    case ViolationKind::DownsampleCollision: return "DownsampleCollision";
    case ViolationKind::DownsampleOrder: return "DownsampleOrder";
    case ViolationKind::DownsampleOutOfRange: return "DownsampleOutOfRange";
    case ViolationKind::SkipAtDownsample: return "SkipAtDownsample";
    case ViolationKind::InactiveSlotOccupied: return "InactiveSlotOccupied";
    case ViolationKind::ActiveSlotEmpty: return "ActiveSlotEmpty";
    case ViolationKind::WidthOutOfRange: return "WidthOutOfRange";
    case ViolationKind::IllegalEdge: return "IllegalEdge";
    case ViolationKind::EmptyNode: return "EmptyNode";
    case ViolationKind::HeadOutOfRange: return "HeadOutOfRange";
    case ViolationKind::HeadStrideInactive: return "HeadStrideInactive";
  }
  return "Unknown";
}

std::string describe(const Violation& v) {
  std::ostringstream os;
  os << to_string(v.kind);
  if (v.layer >= 0) os << " at layer " << v.layer;
  if (v.row >= 0) os << " row " << v.row;
  if (!v.detail.empty()) os << ": " << v.detail;
  return os.str();
}

namespace {

void require_shape(const Genome& g, const SearchSpaceConfig& config) {
  const auto L = static_cast<std::size_t>(config.num_layers);
  if (g.cells.size() != L * kRows)
    throw StructureMismatch("cell grid has " + std::to_string(g.cells.size()) + " slots, expected " +
                            std::to_string(L * kRows));
  if (g.nodes.size() != (L - 1) * kRows)
    throw StructureMismatch("node grid has " + std::to_string(g.nodes.size()) + " slots, expected " +
                            std::to_string((L - 1) * kRows));
}

}  // namespace

NodeGene legal_edges(const Genome& g, int layer, int row) {
  const int start = g.row_start(row);
  if (start < 0 || layer < std::max(start, 1)) return {};
  if (layer == start) return NodeGene{static_cast<std::uint8_t>(Edge::FromHigherRes)};
  NodeGene legal{static_cast<std::uint8_t>(Edge::SameRow)};
  if (row >= 1 && g.active(layer - 1, row - 1)) legal.edges |= static_cast<std::uint8_t>(Edge::FromHigherRes);
  if (row + 1 < kRows && g.active(layer - 1, row + 1)) legal.edges |= static_cast<std::uint8_t>(Edge::FromLowerRes);
  return legal;
}

std::vector<Violation> validate(const Genome& g, const SearchSpaceConfig& config) {
  require_shape(g, config);
  std::vector<Violation> out;
  const int L = config.num_layers;

  if (g.branch_count < 1) {
    out.push_back({ViolationKind::PathCountZero, -1, -1, "branch_count must be greater than 0"});
    return out;
  }
  if (g.branch_count > config.max_branches()) {
    out.push_back({ViolationKind::BranchCountOutOfRange, -1, -1,
                   "branch_count " + std::to_string(g.branch_count) + " exceeds " +
                       std::to_string(config.max_branches())});
    return out;
  }

  for (int r = 1; r < kRows; ++r) {
    const int d = g.downsample_layers[static_cast<std::size_t>(r - 1)];
    if (r < g.branch_count) {
      if (d < 1 || d > L - 1)
        out.push_back({ViolationKind::DownsampleOutOfRange, d, r, "downsample layer must lie in [1, L-1]"});
    } else if (d != 0) {
      out.push_back({ViolationKind::InactiveSlotOccupied, d, r, "downsample layer set for an unused row"});
    }
  }
  if (g.branch_count == 3 && out.empty()) {
    const auto [d2, d3] = g.downsample_layers;
    if (d2 == d3)
      out.push_back({ViolationKind::DownsampleCollision, d2, 2, "stride-16 and stride-32 rows start together"});
    else if (d2 > d3)
      out.push_back({ViolationKind::DownsampleOrder, d3, 2, "stride-32 row starts before stride-16 row"});
  }
  if (!out.empty()) return out;

  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < kRows; ++r) {
      const auto& c = g.cell(l, r);
      if (g.active(l, r)) {
        if (!c)
          out.push_back({ViolationKind::ActiveSlotEmpty, l, r, "active cell has no operator"});
        else if (c->width_index < 0 || c->width_index >= config.width_count())
          out.push_back({ViolationKind::WidthOutOfRange, l, r, "width index " + std::to_string(c->width_index)});
      } else if (c) {
        out.push_back({ViolationKind::InactiveSlotOccupied, l, r, "cell set on an inactive slot"});
      }
    }
  }

  for (int l = 1; l < L; ++l) {
    for (int r = 0; r < kRows; ++r) {
      const auto& n = g.node(l, r);
      if (!g.active(l, r)) {
        if (!n.empty()) out.push_back({ViolationKind::InactiveSlotOccupied, l, r, "node set on an inactive slot"});
        continue;
      }
      const bool entry = (l == g.row_start(r));
      if (entry && !n.has(Edge::FromHigherRes)) {
        out.push_back({ViolationKind::SkipAtDownsample, l, r, "downsample entry must be fed from the higher-resolution row"});
        continue;
      }
      if (n.empty()) {
        out.push_back({ViolationKind::EmptyNode, l, r, "active row has no incoming edge"});
        continue;
      }
      const auto legal = legal_edges(g, l, r);
      if ((n.edges & ~legal.edges) != 0)
        out.push_back({ViolationKind::IllegalEdge, l, r, "edge from a row that is not active"});
    }
  }

  if (g.head_index < 0 || g.head_index >= kHeadCount) {
    out.push_back({ViolationKind::HeadOutOfRange, -1, -1, "head_index " + std::to_string(g.head_index)});
  } else {
    const auto mask = kHeadRowMasks[static_cast<std::size_t>(g.head_index)];
    for (int r = 0; r < kRows; ++r)
      if ((mask & (1u << r)) && !g.active(L - 1, r))
        out.push_back({ViolationKind::HeadStrideInactive, L - 1, r, "head reads a row that is not active"});
  }
  return out;
}

// --- gene space ------------------------------------------------------------

GeneLayout::GeneLayout(const SearchSpaceConfig& config) {
  const int L = config.num_layers;
  const int cell_categories = 1 + 2 * config.width_count();
  auto add = [&](GeneSlot s) {
    s.bit_offset = static_cast<int>(n_bits_);
    n_bits_ += static_cast<std::size_t>(s.categories);
    slots_.push_back(s);
  };

  segment_begin_[0] = 0;
  add({GeneKind::BranchCount, Segment::Topology, -1, -1, kRows, 0});
  add({GeneKind::Downsample, Segment::Topology, -1, 0, L, 0});
  add({GeneKind::Downsample, Segment::Topology, -1, 1, L, 0});
  for (int r = 0; r < kRows; ++r) {
    const auto seg = static_cast<Segment>(1 + r);
    segment_begin_[static_cast<std::size_t>(1 + r)] = slots_.size();
    for (int l = 0; l < L; ++l) add({GeneKind::Cell, seg, l, r, cell_categories, 0});
    for (int l = 1; l < L; ++l) add({GeneKind::Node, seg, l, r, 8, 0});
  }
  segment_begin_[4] = slots_.size();
  add({GeneKind::Head, Segment::Head, -1, -1, kHeadCount, 0});
  segment_begin_[5] = slots_.size();
}

std::size_t n_var(const SearchSpaceConfig& config) { return GeneLayout(config).n_var(); }
std::size_t n_bits(const SearchSpaceConfig& config) { return GeneLayout(config).n_bits(); }

GeneVector to_genes(const Genome& g, const SearchSpaceConfig& config) {
  require_shape(g, config);
  const GeneLayout layout(config);
  const int W = config.width_count();
  GeneVector genes;
  genes.reserve(layout.n_var());
  for (const auto& s : layout.slots()) {
    int v = 0;
    switch (s.kind) {
      case GeneKind::BranchCount: v = g.branch_count - 1; break;
      case GeneKind::Downsample: v = g.downsample_layers[static_cast<std::size_t>(s.row)]; break;
      case GeneKind::Cell: {
        const auto& c = g.cell(s.layer, s.row);
        if (c) {
          if (c->width_index < 0 || c->width_index >= W)
            throw StructureMismatch("cell width index out of range");
          v = 1 + static_cast<int>(c->op) * W + c->width_index;
        }
        break;
      }
      case GeneKind::Node: v = g.node(s.layer, s.row).edges; break;
      case GeneKind::Head: v = g.head_index; break;
    }
    if (v < 0 || v >= s.categories)
      throw StructureMismatch("gene value " + std::to_string(v) + " outside its " +
                              std::to_string(s.categories) + " categories");
    genes.push_back(v);
  }
  return genes;
}

Genome from_genes(const GeneVector& genes, const SearchSpaceConfig& config) {
  const GeneLayout layout(config);
  if (genes.size() != layout.n_var()) throw StructureMismatch("gene vector length mismatch");
  const int W = config.width_count();
  Genome g = Genome::empty(config);
  for (std::size_t i = 0; i < genes.size(); ++i) {
    const auto& s = layout.slots()[i];
    const int v = genes[i];
    switch (s.kind) {
      case GeneKind::BranchCount: g.branch_count = v + 1; break;
      case GeneKind::Downsample: g.downsample_layers[static_cast<std::size_t>(s.row)] = v; break;
      case GeneKind::Cell:
        if (v > 0) g.cell(s.layer, s.row) = CellGene{static_cast<CellOp>((v - 1) / W), (v - 1) % W};
        break;
      case GeneKind::Node: g.node(s.layer, s.row) = NodeGene{static_cast<std::uint8_t>(v)}; break;
      case GeneKind::Head: g.head_index = v; break;
    }
  }
  return g;
}

BitVector encode(const Genome& genome, const SearchSpaceConfig& config) {
  const GeneLayout layout(config);
  const auto genes = to_genes(genome, config);
  BitVector bits(layout.n_bits(), 0);
  for (std::size_t i = 0; i < genes.size(); ++i)
    bits[static_cast<std::size_t>(layout.slots()[i].bit_offset + genes[i])] = 1;
  return bits;
}

Genome decode(const BitVector& bits, const SearchSpaceConfig& config) {
  const GeneLayout layout(config);
  if (bits.size() != layout.n_bits())
    throw MalformedEncoding("bit vector has length " + std::to_string(bits.size()) + ", expected " +
                            std::to_string(layout.n_bits()));
  GeneVector genes;
  genes.reserve(layout.n_var());
  for (std::size_t i = 0; i < layout.n_var(); ++i) {
    const auto& s = layout.slots()[i];
    int hot = -1;
    for (int c = 0; c < s.categories; ++c) {
      const auto b = bits[static_cast<std::size_t>(s.bit_offset + c)];
      if (b > 1) throw MalformedEncoding("bit value other than 0/1 at offset " + std::to_string(s.bit_offset + c));
      if (b == 1) {
        if (hot >= 0) throw MalformedEncoding("gene group " + std::to_string(i) + " has several hot bits");
        hot = c;
      }
    }
    if (hot < 0) throw MalformedEncoding("gene group " + std::to_string(i) + " has no hot bit");
    genes.push_back(hot);
  }
  return from_genes(genes, config);
}

std::string bits_to_string(const BitVector& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

// --- repair / sampling -----------------------------------------------------

namespace {

bool is_subset_nonempty(std::uint8_t mask, std::uint8_t legal) {
  return mask != 0 && (mask & ~legal) == 0;
}

std::uint8_t random_nonempty_subset(std::uint8_t legal, Rng& rng) {
  std::array<std::uint8_t, 7> options{};
  std::size_t n = 0;
  for (std::uint8_t m = 1; m < 8; ++m)
    if (is_subset_nonempty(m, legal)) options[n++] = m;
  return options[rng.index(n)];
}

int draw_branch_count(const SearchSpaceConfig& config, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = 1;
  for (int b = 0; b < kRows; ++b) {
    if (config.branch_priors[b] <= 0.0) continue;
    acc += config.branch_priors[b];
    last = b + 1;
    if (u < acc) return b + 1;
  }
  return last;
}

}  // namespace

Genome repair(GeneVector genes, const SearchSpaceConfig& config, Rng& rng, const SampleOptions& options) {
  const GeneLayout layout(config);
  if (genes.size() != layout.n_var()) throw StructureMismatch("gene vector length mismatch");
  const int L = config.num_layers;

  int bc = std::clamp(genes[0] + 1, 1, config.max_branches());
  if (options.branch_filter) {
    bc = *options.branch_filter;
    if (bc < 1 || bc > config.max_branches()) throw InvalidConfig("branch filter out of range");
  }
  int d2 = genes[1];
  int d3 = genes[2];
  if (bc >= 2) {
    const int hi = bc == 3 ? L - 2 : L - 1;
    if (d2 < 1 || d2 > hi) d2 = rng.uniform_int(1, hi);
  } else {
    d2 = 0;
  }
  if (bc == 3) {
    if (d3 <= d2 || d3 > L - 1) d3 = rng.uniform_int(d2 + 1, L - 1);
  } else {
    d3 = 0;
  }
  genes[0] = bc - 1;
  genes[1] = d2;
  genes[2] = d3;

  Genome topo = Genome::empty(config);
  topo.branch_count = bc;
  topo.downsample_layers = {d2, d3};

  const int W = config.width_count();
  for (std::size_t i = 3; i < genes.size(); ++i) {
    const auto& s = layout.slots()[i];
    int& v = genes[i];
    switch (s.kind) {
      case GeneKind::Cell:
        if (!topo.active(s.layer, s.row))
          v = 0;
        else if (v < 1 || v > 2 * W)
          v = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(2 * W)));
        break;
      case GeneKind::Node: {
        if (!topo.active(s.layer, s.row)) {
          v = 0;
          break;
        }
        const auto legal = legal_edges(topo, s.layer, s.row).edges;
        if (!is_subset_nonempty(static_cast<std::uint8_t>(v), legal)) v = random_nonempty_subset(legal, rng);
        break;
      }
      case GeneKind::Head: {
        std::uint8_t rows_active = 0;
        for (int r = 0; r < bc; ++r) rows_active |= static_cast<std::uint8_t>(1u << r);
        auto ok = [&](int h) { return (kHeadRowMasks[static_cast<std::size_t>(h)] & ~rows_active) == 0; };
        if (v < 0 || v >= kHeadCount || !ok(v)) {
          std::vector<int> legal;
          for (int h = 0; h < kHeadCount; ++h)
            if (ok(h)) legal.push_back(h);
          v = legal[rng.index(legal.size())];
        }
        break;
      }
      default: break;
    }
  }
  return from_genes(genes, config);
}

Genome sample(const SearchSpaceConfig& config, Rng& rng, const SampleOptions& options) {
  const GeneLayout layout(config);
  GeneVector genes(layout.n_var(), 0);
  for (std::size_t i = 0; i < genes.size(); ++i) {
    const auto& s = layout.slots()[i];
    if (s.kind == GeneKind::BranchCount)
      genes[i] = draw_branch_count(config, rng) - 1;
    else
      genes[i] = static_cast<int>(rng.index(static_cast<std::uint64_t>(s.categories)));
  }
  return repair(std::move(genes), config, rng, options);
}

Genome sample(const SearchSpaceConfig& config, std::uint64_t seed, const SampleOptions& options) {
  Rng rng(seed);
  return sample(config, rng, options);
}

// --- neighborhood ----------------------------------------------------------

std::vector<Genome> single_edit_neighbors(const Genome& g, const SearchSpaceConfig& config) {
  std::vector<Genome> out;
  const int L = config.num_layers;
  const int W = config.width_count();
  auto keep_if_valid = [&](Genome&& candidate) {
    if (validate(candidate, config).empty()) out.push_back(std::move(candidate));
  };

  for (int l = 0; l < L; ++l) {
    for (int r = 0; r < kRows; ++r) {
      const auto& c = g.cell(l, r);
      if (!c) continue;
      for (int op = 0; op < 2; ++op) {
        for (int w = 0; w < W; ++w) {
          const CellGene alt{static_cast<CellOp>(op), w};
          if (alt == *c) continue;
          Genome n = g;
          n.cell(l, r) = alt;
          keep_if_valid(std::move(n));
        }
      }
    }
  }
  for (int l = 1; l < L; ++l) {
    for (int r = 0; r < kRows; ++r) {
      if (!g.active(l, r)) continue;
      for (const Edge e : {Edge::SameRow, Edge::FromHigherRes, Edge::FromLowerRes}) {
        Genome n = g;
        n.node(l, r) = g.node(l, r).toggled(e);
        keep_if_valid(std::move(n));
      }
    }
  }
  for (int h = 0; h < kHeadCount; ++h) {
    if (h == g.head_index) continue;
    Genome n = g;
    n.head_index = h;
    keep_if_valid(std::move(n));
  }
  return out;
}

std::vector<Genome> neighbors(const Genome& genome, const SearchSpaceConfig& config, std::uint64_t seed, int k) {
  if (k <= 0) return {};
  auto pool = single_edit_neighbors(genome, config);
  if (pool.empty()) throw NoLegalNeighbor("no single edit of this genome satisfies the constraints");
  Rng rng(seed);
  std::vector<Genome> out;
  out.reserve(static_cast<std::size_t>(k));
  const std::size_t distinct = std::min(pool.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < distinct; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  // Fewer legal edits than requested: draw the rest with replacement.
  while (out.size() < static_cast<std::size_t>(k)) out.push_back(pool[rng.index(pool.size())]);
  return out;
}

}  // namespace mbnas
