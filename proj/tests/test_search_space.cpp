#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "mbnas/errors.hpp"
#include "oracles.hpp"

using namespace mbnas;
using fixture::toy_config;

namespace {

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k; });
}

int gene_distance(const GeneVector& a, const GeneVector& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

TEST_SUITE("search_space") {

TEST_CASE("gene count matches a slot-by-slot count of the grid") {
  for (int L : {2, 4, 12}) {
    SearchSpaceConfig c;
    c.num_layers = L;
    CHECK(n_var(c) == oracle::count_gene_slots(c));
  }
  CHECK(n_var(toy_config()) == 25);
}

TEST_CASE("bit length is the sum of one-hot group sizes") {
  const auto c = toy_config();
  const GeneLayout layout(c);
  std::size_t bits = 0;
  for (const auto& s : layout.slots()) bits += static_cast<std::size_t>(s.categories);
  CHECK(layout.n_bits() == bits);
  CHECK(n_bits(c) == bits);
  CHECK(encode(fixture::one_branch(c), c).size() == bits);
}

TEST_CASE("encode and decode round-trip") {
  const auto c = toy_config();
  const auto g = fixture::one_branch(c);
  CHECK(decode(encode(g, c), c) == g);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = sample(c, s);
    CHECK(decode(encode(r, c), c) == r);
  }
  SearchSpaceConfig big;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = sample(big, s);
    CHECK(decode(encode(r, big), big) == r);
  }
}

TEST_CASE("head change touches only the head bits") {
  const auto c = toy_config();
  auto a = fixture::three_branch(c, 1, 2);
  auto b = a;
  b.head_index = 0;
  const auto ea = encode(a, c);
  const auto eb = encode(b, c);
  const GeneLayout layout(c);
  const auto& head = layout.slots().back();
  REQUIRE(head.kind == GeneKind::Head);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const bool in_head = i >= static_cast<std::size_t>(head.bit_offset);
    if (!in_head) CHECK(ea[i] == eb[i]);
  }
  CHECK(ea != eb);
}

TEST_CASE("malformed encodings are rejected") {
  const auto c = toy_config();
  CHECK_THROWS_AS(decode(BitVector(n_bits(c), 0), c), MalformedEncoding);
  CHECK_THROWS_AS(decode(BitVector(n_bits(c) - 1, 0), c), MalformedEncoding);
  auto bits = encode(fixture::one_branch(c), c);
  bits[bits.size() - 1] = 1;
  bits[bits.size() - 2] = 1;
  CHECK_THROWS_AS(decode(bits, c), MalformedEncoding);
}

TEST_CASE("genome JSON round-trip") {
  SearchSpaceConfig c;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = sample(c, s);
    CHECK(genome_from_json(genome_to_json(g)) == g);
  }
}

TEST_CASE("path count zero") {
  const auto c = toy_config();
  auto g = fixture::one_branch(c);
  g.branch_count = 0;
  const auto vs = validate(g, c);
  REQUIRE(!vs.empty());
  CHECK(has_kind(vs, ViolationKind::PathCountZero));
}

TEST_CASE("downsample collision") {
  const auto c = toy_config();
  auto g = fixture::three_branch(c, 1, 2);
  g.downsample_layers = {2, 2};
  CHECK(has_kind(validate(g, c), ViolationKind::DownsampleCollision));
}

TEST_CASE("skip at a downsample layer") {
  const auto c = toy_config();
  auto g = fixture::two_branch(c, 2);
  CHECK(validate(g, c).empty());
  g.node(2, 1) = fixture::edges(fixture::kSame);
  CHECK(has_kind(validate(g, c), ViolationKind::SkipAtDownsample));
  g.node(2, 1) = fixture::edges(0);
  CHECK(has_kind(validate(g, c), ViolationKind::SkipAtDownsample));
}

TEST_CASE("well-formed fixtures validate") {
  const auto c = toy_config();
  CHECK(validate(fixture::one_branch(c), c).empty());
  CHECK(validate(fixture::two_branch(c, 1), c).empty());
  CHECK(validate(fixture::three_branch(c, 1, 2), c).empty());
  CHECK(validate(fixture::three_branch(c, 2, 3), c).empty());
}

TEST_CASE("structural violations") {
  const auto c = toy_config();
  auto g = fixture::one_branch(c);
  g.cell(0, 1) = CellGene{};
  CHECK(has_kind(validate(g, c), ViolationKind::InactiveSlotOccupied));
  g = fixture::one_branch(c);
  g.cell(2, 0).reset();
  CHECK(has_kind(validate(g, c), ViolationKind::ActiveSlotEmpty));
  g = fixture::one_branch(c);
  g.cell(1, 0)->width_index = 3;
  CHECK(has_kind(validate(g, c), ViolationKind::WidthOutOfRange));
  g = fixture::one_branch(c);
  g.node(1, 0) = fixture::edges(fixture::kSame | fixture::kLower);
  CHECK(has_kind(validate(g, c), ViolationKind::IllegalEdge));
  g = fixture::one_branch(c);
  g.head_index = 1;
  CHECK(has_kind(validate(g, c), ViolationKind::HeadStrideInactive));
  g.head_index = 6;
  CHECK(has_kind(validate(g, c), ViolationKind::HeadOutOfRange));
}

TEST_CASE("samples are legal") {
  SearchSpaceConfig c;
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) CHECK(validate(sample(c, rng), c).empty());
  const auto toy = toy_config();
  for (int b = 1; b <= 3; ++b) {
    SampleOptions o;
    o.branch_filter = b;
    for (int i = 0; i < 200; ++i) {
      const auto g = sample(toy, rng, o);
      CHECK(g.branch_count == b);
      CHECK(validate(g, toy).empty());
    }
  }
}

TEST_CASE("degenerate prior") {
  SearchSpaceConfig c;
  c.branch_priors = {0.0, 0.0, 1.0};
  c.validate();
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(sample(c, rng).branch_count == 3);
}

TEST_CASE("sampling is seed-deterministic") {
  SearchSpaceConfig c;
  CHECK(sample(c, 42) == sample(c, 42));
  CHECK(!(sample(c, 42) == sample(c, 43)));
}

TEST_CASE("config validation") {
  SearchSpaceConfig c;
  CHECK_NOTHROW(c.validate());
  c.branch_priors = {0.5, 0.3, 0.3};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SearchSpaceConfig{};
  c.input_height = 200;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SearchSpaceConfig{};
  c.num_layers = 2;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);  // three rows do not fit, yet prior for 3 is non-zero
  c.branch_priors = {0.4, 0.6, 0.0};
  CHECK_NOTHROW(c.validate());
  c.num_layers = 1;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  c = SearchSpaceConfig{};
  c.stride_rows = {8, 16, 64};
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
}

TEST_CASE("config JSON round-trip") {
  SearchSpaceConfig c;
  c.num_layers = 6;
  c.branch_priors = {0.1, 0.2, 0.7};
  const auto back = config_from_json(config_to_json(c));
  CHECK(back.num_layers == 6);
  CHECK(back.branch_priors == c.branch_priors);
  CHECK(back.width_multipliers == c.width_multipliers);
}

TEST_CASE("neighbors are single edits") {
  const auto c = toy_config();
  const auto g = fixture::two_branch(c, 2);
  const auto base = to_genes(g, c);
  const auto ns = neighbors(g, c, 9, 5);
  CHECK(ns.size() == 5);
  std::set<GeneVector> distinct;
  for (const auto& n : ns) {
    CHECK(gene_distance(base, to_genes(n, c)) == 1);
    CHECK(validate(n, c).empty());
    distinct.insert(to_genes(n, c));
  }
  CHECK(distinct.size() == 5);
  CHECK(neighbors(g, c, 9, 0).empty());
  CHECK(neighbors(g, c, 9, 5) == ns);
}

TEST_CASE("no legal single edit drops the mandatory downsample edge") {
  const auto c = toy_config();
  for (const auto& g : {fixture::two_branch(c, 1), fixture::two_branch(c, 2), fixture::three_branch(c, 1, 2)}) {
    const auto all = single_edit_neighbors(g, c);
    CHECK(!all.empty());
    for (const auto& n : all) {
      CHECK(validate(n, c).empty());
      for (int r = 1; r < n.branch_count; ++r) CHECK(n.node(n.row_start(r), r).has(Edge::FromHigherRes));
    }
    // Independent enumeration: every cell or head gene moved to every other
    // value, every node edge toggled, kept if legal.
    const GeneLayout layout(c);
    const auto base = to_genes(g, c);
    std::set<GeneVector> expected;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const auto kind = layout.slots()[i].kind;
      if (kind == GeneKind::BranchCount || kind == GeneKind::Downsample) continue;
      for (int v = 0; v < layout.slots()[i].categories; ++v) {
        if (v == base[i]) continue;
        // A node edit toggles exactly one edge.
        if (kind == GeneKind::Node && __builtin_popcount(static_cast<unsigned>(v ^ base[i])) != 1) continue;
        auto genes = base;
        genes[i] = v;
        const auto cand = from_genes(genes, c);
        if (validate(cand, c).empty()) expected.insert(genes);
      }
    }
    std::set<GeneVector> got;
    for (const auto& n : all) got.insert(to_genes(n, c));
    CHECK(got == expected);
  }
}

TEST_CASE("more neighbors than legal edits") {
  const auto c = toy_config();
  const auto g = fixture::one_branch(c);
  const auto pool = single_edit_neighbors(g, c).size();
  const auto ns = neighbors(g, c, 1, static_cast<int>(pool) + 7);
  CHECK(ns.size() == pool + 7);
}

}  // TEST_SUITE
