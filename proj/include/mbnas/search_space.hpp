#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbnas/rng.hpp"

namespace mbnas {

inline constexpr int kRows = 3;
inline constexpr int kHeadCount = 6;

/// Head options as row masks (bit r set = stride row r contributes):
/// (8), (16), (32), (8,16), (8,32), (8,16,32).
inline constexpr std::array<std::uint8_t, kHeadCount> kHeadRowMasks{1, 2, 4, 3, 5, 7};

std::vector<int> head_strides(int head_index);

struct SearchSpaceConfig {
  int num_layers = 12;
  std::array<int, kRows> stride_rows{8, 16, 32};
  std::vector<int> width_multipliers{8, 12, 16};
  int base_channels = 64;
  std::array<double, kRows> branch_priors{0.2, 0.3, 0.5};
  int input_height = 256;
  int input_width = 512;
  int attention_dim = 48;
  int head_channels = 64;

  /// Throws InvalidConfig.
  void validate() const;

  int width_count() const { return static_cast<int>(width_multipliers.size()); }
  /// Channels of a cell on `row` using width choice `width_index`.
  int channels(int row, int width_index) const;
  int row_height(int row) const { return input_height / stride_rows[row]; }
  int row_width(int row) const { return input_width / stride_rows[row]; }
  /// Largest branch count with non-zero prior that also fits in num_layers.
  int max_branches() const { return num_layers >= 3 ? 3 : 2; }
};

SearchSpaceConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SearchSpaceConfig& config);

enum class CellOp : std::uint8_t { LightweightConv = 0, MemEffSelfAttention = 1 };

struct CellGene {
  CellOp op = CellOp::LightweightConv;
  int width_index = 0;

  friend bool operator==(const CellGene&, const CellGene&) = default;
};

enum class Edge : std::uint8_t { SameRow = 1, FromHigherRes = 2, FromLowerRes = 4 };

/// Set of edges fused at a node. The empty set marks a slot with no node.
struct NodeGene {
  std::uint8_t edges = 0;

  bool has(Edge e) const { return (edges & static_cast<std::uint8_t>(e)) != 0; }
  bool empty() const { return edges == 0; }
  int count() const { return __builtin_popcount(edges); }
  NodeGene toggled(Edge e) const {
    return NodeGene{static_cast<std::uint8_t>(edges ^ static_cast<std::uint8_t>(e))};
  }

  friend bool operator==(const NodeGene&, const NodeGene&) = default;
};

/// One candidate architecture. Cells are indexed layer-major,
/// `layer * kRows + row`; nodes sit in front of layers 1..L-1 and are
/// indexed `(layer - 1) * kRows + row`. Inactive slots hold nullopt / an
/// empty node.
struct Genome {
  int branch_count = 1;
  /// First layers of the stride-16 and stride-32 rows; 0 when unused.
  std::array<int, 2> downsample_layers{0, 0};
  std::vector<std::optional<CellGene>> cells;
  std::vector<NodeGene> nodes;
  int head_index = 0;

  static Genome empty(const SearchSpaceConfig& config);

  const std::optional<CellGene>& cell(int layer, int row) const { return cells[layer * kRows + row]; }
  std::optional<CellGene>& cell(int layer, int row) { return cells[layer * kRows + row]; }
  const NodeGene& node(int layer, int row) const { return nodes[(layer - 1) * kRows + row]; }
  NodeGene& node(int layer, int row) { return nodes[(layer - 1) * kRows + row]; }

  /// First active layer of `row`, or -1 if the row is not part of the genome.
  int row_start(int row) const;
  bool active(int layer, int row) const {
    const int s = row_start(row);
    return s >= 0 && layer >= s;
  }

  friend bool operator==(const Genome&, const Genome&) = default;
};

nlohmann::json genome_to_json(const Genome& genome);
Genome genome_from_json(const nlohmann::json& j);

// --- constraints -----------------------------------------------------------

enum class ViolationKind {
  PathCountZero,          // constraint 1
  BranchCountOutOfRange,
  DownsampleCollision,    // constraint 2
  DownsampleOrder,
  DownsampleOutOfRange,
  SkipAtDownsample,       // constraint 3
  InactiveSlotOccupied,
  ActiveSlotEmpty,
  WidthOutOfRange,
  IllegalEdge,
  EmptyNode,
  HeadOutOfRange,
  HeadStrideInactive,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int layer = -1;
  int row = -1;
  std::string detail;
};

std::string describe(const Violation& v);

/// Empty iff the genome is a legal sub-network: path count, distinct
/// downsample positions, no skip at a downsample position, plus the
/// structural rules of the grid (slot occupancy, edge legality, head).
std::vector<Violation> validate(const Genome& genome, const SearchSpaceConfig& config);

/// Edges that may legally feed `row` at `layer` (entry nodes allow only
/// FromHigherRes).
NodeGene legal_edges(const Genome& genome, int layer, int row);

// --- gene space ------------------------------------------------------------

enum class Segment : std::uint8_t { Topology = 0, Row8 = 1, Row16 = 2, Row32 = 3, Head = 4 };
inline constexpr int kSegments = 5;

enum class GeneKind : std::uint8_t { BranchCount, Downsample, Cell, Node, Head };

struct GeneSlot {
  GeneKind kind;
  Segment segment;
  int layer = -1;  // Cell/Node
  int row = -1;    // Cell/Node; Downsample: 0 for d2, 1 for d3
  int categories = 0;
  int bit_offset = 0;
};

/// One categorical value per gene. Category 0 is the reserved "inactive"
/// value for downsample, cell and node genes.
using GeneVector = std::vector<int>;
using BitVector = std::vector<std::uint8_t>;

/// Ordered gene groups: topology | row-8 | row-16 | row-32 | head. Within a
/// row segment: cells for layers 0..L-1, then nodes for layers 1..L-1.
class GeneLayout {
public:
  explicit GeneLayout(const SearchSpaceConfig& config);

  const std::vector<GeneSlot>& slots() const { return slots_; }
  std::size_t n_var() const { return slots_.size(); }
  std::size_t n_bits() const { return n_bits_; }
  /// Index of the first gene of `segment`.
  std::size_t segment_begin(Segment segment) const {
    return segment_begin_[static_cast<int>(segment)];
  }

private:
  std::vector<GeneSlot> slots_;
  std::array<std::size_t, kSegments + 1> segment_begin_{};
  std::size_t n_bits_ = 0;
};

std::size_t n_var(const SearchSpaceConfig& config);
std::size_t n_bits(const SearchSpaceConfig& config);

/// Throws StructureMismatch when grids or values do not fit the config.
GeneVector to_genes(const Genome& genome, const SearchSpaceConfig& config);
/// Literal inverse of to_genes; performs no legality repair.
Genome from_genes(const GeneVector& genes, const SearchSpaceConfig& config);

BitVector encode(const Genome& genome, const SearchSpaceConfig& config);
/// Throws MalformedEncoding.
Genome decode(const BitVector& bits, const SearchSpaceConfig& config);

std::string bits_to_string(const BitVector& bits);

struct SampleOptions {
  /// Restrict to one branch count (independent 1/2/3-branch searches).
  std::optional<int> branch_filter;
};

/// Turns an arbitrary gene vector into a legal genome by resampling only
/// the offending gene groups, uniformly over their legal values.
Genome repair(GeneVector genes, const SearchSpaceConfig& config, Rng& rng,
              const SampleOptions& options = {});

/// Branch count drawn from the priors, every other gene uniform over its
/// legal values.
Genome sample(const SearchSpaceConfig& config, Rng& rng, const SampleOptions& options = {});
Genome sample(const SearchSpaceConfig& config, std::uint64_t seed, const SampleOptions& options = {});

/// Every genome reachable by one cell change, one node edge toggle, or one
/// head change that still validates.
std::vector<Genome> single_edit_neighbors(const Genome& genome, const SearchSpaceConfig& config);

/// k seeded single-edit neighbors, distinct while the legal edit set lasts.
/// Throws NoLegalNeighbor when no single edit is legal and k > 0.
std::vector<Genome> neighbors(const Genome& genome, const SearchSpaceConfig& config,
                              std::uint64_t seed, int k);

}  // namespace mbnas
