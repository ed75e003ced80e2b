#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mbnas/nsga2.hpp"

namespace mbnas {

/// Evaluated candidates plus the indices of their internal non-dominated
/// subset (ascending).
struct BaselineResult {
  std::vector<EvaluatedCandidate> pool;
  std::vector<std::size_t> non_dominated;
  std::uint64_t stalls = 0;  // local search iterations without an accepted move
  std::uint64_t moves = 0;
};

/// Indices of the members of `objectives` not c-dominated by any other.
std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> objectives, ObjectivePair pair);

BaselineResult random_baseline(const SearchSpaceConfig& config, int n, Evaluator& evaluator, std::uint64_t seed,
                               ObjectivePair pair = {}, const SampleOptions& options = {});

struct LocalSearchParams {
  int seeds = 5;
  int iterations = 32;
  int neighbors = 5;
  ObjectivePair acceptance{MinimizeAxis::Flops};

  void validate() const;
};

/// Single-edit local search from `seeds` sampled incumbents; a neighbor
/// replaces the incumbent only if it dominates it under `acceptance`. All
/// evaluated candidates are pooled.
BaselineResult local_search(const SearchSpaceConfig& config, const LocalSearchParams& params, Evaluator& evaluator,
                            std::uint64_t seed, const SampleOptions& options = {});

/// For each target the front member with the closest FLOPs; ties go to lower
/// latency, then to the lexicographically smaller encoding. Throws EmptyFront.
std::vector<EvaluatedCandidate> select_closest_by_flops(std::span<const EvaluatedCandidate> front,
                                                        std::span<const double> targets);

/// Tau-a: (concordant - discordant) / C(n, 2). Tied pairs count as neither.
/// Throws LengthMismatch.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Sample Pearson correlation. Throws LengthMismatch or ZeroVariance.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Two-column delimited text (id, value); '#' starts a comment line, the
/// delimiter may be a comma, tab or spaces. A non-numeric first row is
/// taken as a header.
std::vector<std::pair<std::string, double>> read_value_table(const std::string& path);

/// Pairs values of two tables by id. Throws LengthMismatch when the id sets
/// differ.
std::pair<std::vector<double>, std::vector<double>> align_by_id(
    const std::vector<std::pair<std::string, double>>& a, const std::vector<std::pair<std::string, double>>& b);

nlohmann::json baseline_to_json(const BaselineResult& result, ObjectivePair pair, const std::string& kind);

}  // namespace mbnas
