#pragma once

#include <cstdint>

#include "mbnas/cost_model.hpp"
#include "mbnas/search_space.hpp"

namespace fixture {

using namespace mbnas;

inline SearchSpaceConfig toy_config() {
  SearchSpaceConfig c;
  c.num_layers = 4;
  return c;
}

inline HardwareProfile unit_profile() {
  HardwareProfile p;
  p.coefficients.fill(1.0);
  p.overhead_ms = 0.0;
  return p;
}

inline NodeGene edges(std::uint8_t mask) { return NodeGene{mask}; }
inline constexpr std::uint8_t kSame = 1, kHigher = 2, kLower = 4;

/// Single stride-8 row, every cell the same choice.
inline Genome one_branch(const SearchSpaceConfig& c, CellGene cell = {}) {
  Genome g = Genome::empty(c);
  g.branch_count = 1;
  for (int l = 0; l < c.num_layers; ++l) {
    g.cell(l, 0) = cell;
    if (l > 0) g.node(l, 0) = edges(kSame);
  }
  return g;
}

/// Two rows; the stride-16 row starts at layer `d2`.
inline Genome two_branch(const SearchSpaceConfig& c, int d2, CellGene cell = {}) {
  Genome g = one_branch(c, cell);
  g.branch_count = 2;
  g.downsample_layers = {d2, 0};
  for (int l = d2; l < c.num_layers; ++l) {
    g.cell(l, 1) = cell;
    g.node(l, 1) = edges(l == d2 ? kHigher : kSame);
  }
  g.head_index = 3;  // (8, 16)
  return g;
}

/// Three rows starting at layers d2 < d3, with every legal edge at the
/// non-entry nodes.
inline Genome three_branch(const SearchSpaceConfig& c, int d2, int d3, CellGene cell = {}) {
  Genome g = two_branch(c, d2, cell);
  g.branch_count = 3;
  g.downsample_layers = {d2, d3};
  for (int l = d3; l < c.num_layers; ++l) {
    g.cell(l, 2) = cell;
    g.node(l, 2) = edges(l == d3 ? kHigher : kSame | kHigher);
  }
  for (int l = d3 + 1; l < c.num_layers; ++l) g.node(l, 1) = edges(kSame | kHigher | kLower);
  g.head_index = 5;  // (8, 16, 32)
  return g;
}

}  // namespace fixture
