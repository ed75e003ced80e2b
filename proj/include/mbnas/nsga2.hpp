#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mbnas/evaluator.hpp"
#include "mbnas/search_space.hpp"

namespace mbnas {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

struct Nsga2Params {
  int population_size = 40;
  int generations = 20;
  double crossover_prob = 0.9;
  std::optional<double> mutation_rate;  // default 1 / n_var
  std::optional<double> latency_cap;    // S_max, ms
  std::optional<double> score_min;      // floor applied to offspring only
  ObjectivePair objectives;
  std::uint64_t seed = 0;
  int top_k = 5;
  SampleOptions sampling;
  /// Cap/duplicate rejections tolerated per offspring slot before falling
  /// back to fresh samples, and fresh samples before reusing a parent.
  int slot_retry_budget = 20;
  int slot_fresh_budget = 200;
  /// Sampling attempts allowed to assemble the initial 2n candidates.
  int init_attempt_budget = 0;  // 0 -> max(2000, 100 * population_size)

  /// Throws InvalidConfig.
  void validate() const;
};

/// Pareto dominance on (score up, pair axis down). Both vectors are taken
/// as feasible.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b, ObjectivePair pair);

/// Constrained domination: feasible beats infeasible, infeasible ordered by
/// violation magnitude, feasible pairs by dominates().
bool constrained_dominates(const ObjectiveVector& a, const ObjectiveVector& b, ObjectivePair pair);

/// Fronts of indices into `objectives`; each front sorted ascending.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveVector> objectives,
                                                         ObjectivePair pair);

/// Crowding distance of each member of one front, in input order.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> front, ObjectivePair pair);

struct RankedMember {
  std::size_t index = 0;  // caller-defined handle
  int rank = 0;
  double crowding = 0.0;
};

/// Ranks and crowding for a whole population (crowding computed per front).
std::vector<RankedMember> rank_population(std::span<const ObjectiveVector> objectives, ObjectivePair pair);

/// Survivor selection: whole fronts first, the last front truncated by
/// decreasing crowding distance. Returns `count` entries of `ranked`.
std::vector<RankedMember> select_survivors(std::vector<RankedMember> ranked, std::size_t count);

/// Binary tournament: lower rank, then larger crowding, then a coin flip.
/// Returns 0 if `a` wins, 1 if `b` wins.
int tournament_winner(const RankedMember& a, const RankedMember& b, Rng& rng);

/// `count` binary tournaments over `pool`; returns positions in `pool`.
std::vector<std::size_t> tournament_select(std::span<const RankedMember> pool, std::size_t count, Rng& rng);

/// One-point crossover at a segment boundary (topology | row-8 | row-16 |
/// row-32 | head), then repair. With probability 1 - p_c the parents are
/// returned unchanged.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpaceConfig& config, double p_c,
                                    Rng& rng, const SampleOptions& options = {});

/// Crossover with the tail starting at `cut` swapped.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, const SearchSpaceConfig& config,
                                       Segment cut, Rng& rng, const SampleOptions& options = {});

/// Each gene independently moved to a different category with probability
/// `rate`; no repair.
GeneVector mutate_genes(const GeneVector& genes, const GeneLayout& layout, double rate, Rng& rng);

Genome mutate(const Genome& genome, const SearchSpaceConfig& config, double rate, Rng& rng,
              const SampleOptions& options = {});

struct EvaluatedCandidate {
  std::uint64_t id = 0;
  Genome genome;
  BitVector bits;
  ObjectiveVector objectives;
  int rank = 0;
  double crowding = 0.0;
  int generation = 0;
};

struct SearchStats {
  std::uint64_t init_evaluations = 0;
  std::uint64_t offspring_evaluations = 0;
  std::uint64_t cap_rejections = 0;
  std::uint64_t duplicate_rejections = 0;
  std::uint64_t floor_rejections = 0;
  std::uint64_t fresh_fills = 0;
  std::uint64_t parent_reuses = 0;

  std::uint64_t evaluations() const { return init_evaluations + offspring_evaluations; }
};

struct GenerationSnapshot {
  int generation = 0;
  std::vector<std::uint64_t> population;
  std::vector<std::uint64_t> front;
};

/// Every evaluated candidate plus the running non-dominated subset.
class FrontArchive {
public:
  explicit FrontArchive(ObjectivePair pair = {}) : pair_(pair) {}

  /// Appends a candidate; duplicates (identical encodings) are rejected and
  /// false is returned.
  bool add(EvaluatedCandidate candidate);
  bool contains(const BitVector& bits) const;

  const std::vector<EvaluatedCandidate>& candidates() const { return candidates_; }
  std::vector<EvaluatedCandidate>& candidates() { return candidates_; }
  /// Indices into candidates(), ascending.
  const std::vector<std::size_t>& non_dominated() const { return non_dominated_; }
  ObjectivePair pair() const { return pair_; }

  /// Recomputes rank and crowding of every candidate over the whole archive.
  void assign_global_ranks();

  std::vector<std::size_t> top_k;
  std::vector<GenerationSnapshot> history;
  SearchStats stats;
  bool aborted = false;
  std::string error;
  std::optional<int> branch_filter;

private:
  ObjectivePair pair_;
  std::vector<EvaluatedCandidate> candidates_;
  std::vector<std::size_t> non_dominated_;
  std::vector<BitVector> sorted_keys_;
};

/// Generational constrained NSGA-II. The profile provides the latency
/// estimate used by the cap before a candidate is evaluated. Evaluator
/// failures abort the run and return the partial archive with aborted set;
/// InfeasibleSpace is thrown when initialization cannot fill 2n slots.
FrontArchive search(const SearchSpaceConfig& config, const HardwareProfile& profile, const Nsga2Params& params,
                    Evaluator& evaluator);

nlohmann::json archive_to_json(const FrontArchive& archive);

}  // namespace mbnas
