#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "fixtures.hpp"
#include "mbnas/errors.hpp"
#include "mbnas/nsga2.hpp"
#include "oracles.hpp"

using namespace mbnas;
using fixture::toy_config;

namespace {

ObjectiveVector ov(double score, double latency) {
  ObjectiveVector v;
  v.score = score;
  v.latency_ms = latency;
  return v;
}

std::vector<oracle::Point> points(const std::vector<ObjectiveVector>& vs) {
  std::vector<oracle::Point> out;
  for (const auto& v : vs) out.push_back({v.score, v.latency_ms});
  return out;
}

int changed(const GeneVector& a, const GeneVector& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

TEST_SUITE("nsga2") {

TEST_CASE("dominance") {
  const ObjectivePair p;
  CHECK(dominates(ov(80, 10), ov(70, 12), p));
  CHECK(!dominates(ov(80, 10), ov(80, 10), p));
  CHECK(!dominates(ov(80, 10), ov(82, 8), p));
  CHECK(dominates(ov(82, 8), ov(80, 10), p));
  CHECK(dominates(ov(80, 10), ov(80, 11), p));
}

TEST_CASE("constrained dominance") {
  const ObjectivePair p;
  auto bad = ov(99, 1);
  bad.feasible = false;
  bad.violation = 5;
  auto worse = bad;
  worse.violation = 9;
  CHECK(constrained_dominates(ov(10, 50), bad, p));
  CHECK(!constrained_dominates(bad, ov(10, 50), p));
  CHECK(constrained_dominates(bad, worse, p));
  CHECK(!constrained_dominates(worse, bad, p));
  CHECK(!constrained_dominates(bad, bad, p));
}

TEST_CASE("objective pair selects the minimized axis") {
  ObjectiveVector a = ov(80, 10), b = ov(80, 10);
  a.flops_g = 1.0;
  b.flops_g = 2.0;
  CHECK(!dominates(a, b, ObjectivePair{MinimizeAxis::Latency}));
  CHECK(dominates(a, b, ObjectivePair{MinimizeAxis::Flops}));
  a.params_m = 3.0;
  CHECK(dominates(b, a, ObjectivePair{MinimizeAxis::Params}));
}

TEST_CASE("non-dominated sort examples") {
  const ObjectivePair p;
  const std::vector<ObjectiveVector> pop{ov(0.8, 10), ov(0.7, 5), ov(0.6, 20), ov(0.75, 8)};
  const auto f = non_dominated_sort(pop, p);
  REQUIRE(f.size() == 2);
  CHECK(f[0] == std::vector<std::size_t>{0, 1, 3});
  CHECK(f[1] == std::vector<std::size_t>{2});

  const std::vector<ObjectiveVector> same(6, ov(1, 1));
  CHECK(non_dominated_sort(same, p).size() == 1);

  const std::vector<ObjectiveVector> chain{ov(1, 3), ov(3, 1), ov(2, 2)};
  const auto fc = non_dominated_sort(chain, p);
  REQUIRE(fc.size() == 3);
  CHECK(fc[0] == std::vector<std::size_t>{1});
  CHECK(fc[1] == std::vector<std::size_t>{2});
  CHECK(fc[2] == std::vector<std::size_t>{0});
}

TEST_CASE("non-dominated sort against peeling") {
  Rng rng(77);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.index(120));
    std::vector<ObjectiveVector> pop;
    for (int i = 0; i < n; ++i) pop.push_back(ov(static_cast<double>(rng.index(15)), static_cast<double>(rng.index(15))));
    CHECK(non_dominated_sort(pop, ObjectivePair{}) == oracle::fronts(points(pop)));
  }
}

TEST_CASE("crowding distance") {
  const ObjectivePair p;
  std::vector<ObjectiveVector> front;
  for (int i = 1; i <= 5; ++i) front.push_back(ov(i, 6 - i));
  const auto d = crowding_distance(front, p);
  CHECK(std::isinf(d[0]));
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 1.0);
  CHECK(d[3] == 1.0);
  CHECK(std::isinf(d[4]));
  const auto one = crowding_distance(std::vector<ObjectiveVector>{ov(1, 1)}, p);
  CHECK(std::isinf(one[0]));
  const auto two = crowding_distance(std::vector<ObjectiveVector>{ov(1, 2), ov(2, 1)}, p);
  CHECK(std::isinf(two[0]));
  CHECK(std::isinf(two[1]));
}

TEST_CASE("tournament") {
  Rng rng(1);
  const RankedMember r0{0, 0, 0.1}, r2{1, 2, 100.0};
  for (int i = 0; i < 100; ++i) {
    CHECK(tournament_winner(r0, r2, rng) == 0);
    CHECK(tournament_winner(r2, r0, rng) == 1);
  }
  const RankedMember inf{0, 1, kInfiniteDistance}, finite{1, 1, 0.3};
  CHECK(tournament_winner(inf, finite, rng) == 0);
  CHECK(tournament_winner(finite, inf, rng) == 1);
  const RankedMember e1{0, 1, 0.5}, e2{1, 1, 0.5};
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += tournament_winner(e1, e2, rng) == 0;
  CHECK(std::abs(first / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("survivor selection truncates the last front by crowding") {
  const ObjectivePair p;
  std::vector<ObjectiveVector> pop;
  for (int i = 1; i <= 5; ++i) pop.push_back(ov(i, i));  // front 0
  pop.push_back(ov(0, 10));                              // front 1
  auto ranked = rank_population(pop, p);
  const auto kept = select_survivors(ranked, 3);
  REQUIRE(kept.size() == 3);
  std::set<std::size_t> ids;
  for (const auto& m : kept) ids.insert(m.index);
  CHECK(ids.count(0) == 1);
  CHECK(ids.count(4) == 1);
  CHECK(ids.count(5) == 0);
  const auto all = select_survivors(ranked, 6);
  CHECK(all.size() == 6);
}

TEST_CASE("crossover") {
  const auto c = toy_config();
  Rng rng(4);
  const auto a = fixture::three_branch(c, 1, 2, CellGene{CellOp::LightweightConv, 0});
  const auto b = fixture::two_branch(c, 2, CellGene{CellOp::MemEffSelfAttention, 2});
  const auto [x, y] = crossover(a, b, c, 0.0, rng);
  CHECK(x == a);
  CHECK(y == b);
  for (double pc : {0.0, 0.5, 1.0}) {
    const auto [s, t] = crossover(a, a, c, pc, rng);
    CHECK(s == a);
    CHECK(t == a);
  }
  for (int i = 0; i < 200; ++i) {
    const auto [s, t] = crossover(a, b, c, 1.0, rng);
    CHECK(validate(s, c).empty());
    CHECK(validate(t, c).empty());
  }
}

TEST_CASE("crossover before the stride-32 row swaps that row only") {
  const auto c = toy_config();
  Rng rng(6);
  auto a = fixture::three_branch(c, 1, 2, CellGene{CellOp::LightweightConv, 0});
  auto b = a;
  for (int l = 2; l < c.num_layers; ++l) b.cell(l, 2) = CellGene{CellOp::MemEffSelfAttention, 1};
  const auto [x, y] = crossover_at(a, b, c, Segment::Row32, rng);
  const GeneLayout layout(c);
  const auto ga = to_genes(a, c), gb = to_genes(b, c), gx = to_genes(x, c), gy = to_genes(y, c);
  const auto cut = layout.segment_begin(Segment::Row32);
  const auto end = layout.segment_begin(Segment::Head);
  for (std::size_t i = 0; i < ga.size(); ++i) {
    const bool tail = i >= cut;
    CHECK(gx[i] == (tail ? gb[i] : ga[i]));
    CHECK(gy[i] == (tail ? ga[i] : gb[i]));
  }
  CHECK(end > cut);
  CHECK(x == b);
  CHECK(y == a);
}

TEST_CASE("mutation") {
  const auto c = toy_config();
  const GeneLayout layout(c);
  Rng rng(12);
  const auto g = fixture::three_branch(c, 1, 2);
  const auto genes = to_genes(g, c);
  CHECK(mutate_genes(genes, layout, 0.0, rng) == genes);
  CHECK(mutate(g, c, 0.0, rng) == g);

  const auto all = mutate_genes(genes, layout, 1.0, rng);
  for (std::size_t i = 0; i < genes.size(); ++i)
    if (layout.slots()[i].categories >= 2) CHECK(all[i] != genes[i]);

  const double rate = 1.0 / static_cast<double>(n_var(c));
  long total = 0;
  for (int i = 0; i < 10000; ++i) total += changed(genes, mutate_genes(genes, layout, rate, rng));
  CHECK(std::abs(total / 10000.0 - 1.0) <= 0.05);

  for (int i = 0; i < 300; ++i) CHECK(validate(mutate(g, c, 0.2, rng), c).empty());
}

TEST_CASE("params validation") {
  Nsga2Params p;
  CHECK_NOTHROW(p.validate());
  p.population_size = 7;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
  p = Nsga2Params{};
  p.crossover_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
}

TEST_CASE("archive rejects duplicates and tracks the front") {
  const auto c = toy_config();
  FrontArchive ar;
  EvaluatedCandidate e;
  e.id = 0;
  e.genome = fixture::one_branch(c);
  e.bits = encode(e.genome, c);
  e.objectives = ov(50, 5);
  CHECK(ar.add(e));
  CHECK(!ar.add(e));
  auto f = e;
  f.id = 1;
  f.genome = fixture::one_branch(c, CellGene{CellOp::LightweightConv, 1});
  f.bits = encode(f.genome, c);
  f.objectives = ov(60, 4);
  CHECK(ar.add(f));
  CHECK(ar.non_dominated() == std::vector<std::size_t>{1});
  CHECK(ar.contains(e.bits));
}

TEST_CASE("cap below every genome names the cap") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  ProxyEvaluator ev(c, prof);
  Nsga2Params p;
  p.population_size = 4;
  p.generations = 1;
  p.latency_cap = 1e-9;
  try {
    search(c, prof, p, ev);
    FAIL("expected InfeasibleSpace");
  } catch (const InfeasibleSpace& e) {
    CHECK(std::string(e.what()).find("S_max") != std::string::npos);
  }
}

TEST_CASE("search is deterministic and self-consistent") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  ProxyEvaluator ev(c, prof);
  Nsga2Params p;
  p.population_size = 8;
  p.generations = 4;
  p.seed = 1;
  const auto a = search(c, prof, p, ev);
  const auto b = search(c, prof, p, ev);
  CHECK(archive_to_json(a).dump() == archive_to_json(b).dump());
  CHECK(a.stats.init_evaluations == 16);
  CHECK(a.stats.offspring_evaluations == 32);
  CHECK(a.candidates().size() == 48);
  CHECK(a.history.size() == 5);

  std::vector<ObjectiveVector> objs;
  for (const auto& cand : a.candidates()) {
    objs.push_back(cand.objectives);
    CHECK(validate(cand.genome, c).empty());
  }
  CHECK(a.non_dominated() == oracle::nondominated(points(objs)));
  std::set<BitVector> keys;
  for (const auto& cand : a.candidates()) keys.insert(cand.bits);
  CHECK(keys.size() == a.candidates().size());

  p.seed = 2;
  CHECK(archive_to_json(search(c, prof, p, ev)).dump() != archive_to_json(a).dump());
}

TEST_CASE("score floor and cap are enforced on offspring") {
  const auto c = toy_config();
  const auto prof = fixture::unit_profile();
  ProxyEvaluator ev(c, prof);
  Nsga2Params p;
  p.population_size = 8;
  p.generations = 5;
  p.seed = 3;
  p.latency_cap = 2.0;
  p.score_min = 20.0;
  const auto a = search(c, prof, p, ev);
  for (const auto& cand : a.candidates()) {
    CHECK(cand.objectives.latency_ms <= 2.0);
  }
  CHECK(a.stats.offspring_evaluations == 40);
}

TEST_CASE("evaluator failure aborts with a partial archive") {
  struct Failing : Evaluator {
    int calls = 0;
    ObjectiveVector evaluate(const EvalJob& job) override {
      if (++calls > 20) throw EvaluatorCrash("gone");
      return ObjectiveVector{static_cast<double>(job.id), 1.0, 1.0, 1.0, 0.0, true, 0.0, ObjectiveSource::Proxy};
    }
  } ev;
  const auto c = toy_config();
  Nsga2Params p;
  p.population_size = 8;
  p.generations = 3;
  const auto a = search(c, fixture::unit_profile(), p, ev);
  CHECK(a.aborted);
  CHECK(!a.error.empty());
  CHECK(a.candidates().size() >= 16);
  CHECK(a.candidates().size() < 40);
}

}  // TEST_SUITE
