#include "mbnas/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "mbnas/architecture.hpp"
#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;

void Nsga2Params::validate() const {
  if (population_size < 2 || population_size % 2 != 0)
    throw InvalidConfig("population_size must be even and >= 2");
  if (generations < 0) throw InvalidConfig("generations must be >= 0");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) throw InvalidConfig("crossover_prob must lie in [0, 1]");
  if (mutation_rate && !(*mutation_rate > 0.0 && *mutation_rate <= 1.0))
    throw InvalidConfig("mutation_rate must lie in (0, 1]");
  if (top_k < 0) throw InvalidConfig("top_k must be >= 0");
  if (slot_retry_budget < 0 || slot_fresh_budget < 0) throw InvalidConfig("retry budgets must be >= 0");
}

// --- ranking ----------------------------------------------------------------

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b, ObjectivePair pair) {
  const double ma = pair.minimized(a);
  const double mb = pair.minimized(b);
  return a.score >= b.score && ma <= mb && (a.score > b.score || ma < mb);
}

bool constrained_dominates(const ObjectiveVector& a, const ObjectiveVector& b, ObjectivePair pair) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.violation < b.violation;
  return dominates(a, b, pair);
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const ObjectiveVector> objectives,
                                                         ObjectivePair pair) {
  const std::size_t n = objectives.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dominators(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (constrained_dominates(objectives[i], objectives[j], pair)) {
        dominated[i].push_back(j);
        ++dominators[j];
      } else if (constrained_dominates(objectives[j], objectives[i], pair)) {
        dominated[j].push_back(i);
        ++dominators[i];
      }
    }
  }
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i)
    if (dominators[i] == 0) current.push_back(i);
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current)
      for (std::size_t j : dominated[i])
        if (--dominators[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> front, ObjectivePair pair) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInfiniteDistance);
    return dist;
  }
  auto accumulate = [&](auto value) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(front[a]) < value(front[b]); });
    dist[order.front()] = kInfiniteDistance;
    dist[order.back()] = kInfiniteDistance;
    const double range = value(front[order.back()]) - value(front[order.front()]);
    if (range <= 0.0) return;
    for (std::size_t k = 1; k + 1 < n; ++k)
      dist[order[k]] += (value(front[order[k + 1]]) - value(front[order[k - 1]])) / range;
  };
  accumulate([](const ObjectiveVector& v) { return v.score; });
  accumulate([pair](const ObjectiveVector& v) { return pair.minimized(v); });
  return dist;
}

std::vector<RankedMember> rank_population(std::span<const ObjectiveVector> objectives, ObjectivePair pair) {
  std::vector<RankedMember> out(objectives.size());
  const auto fronts = non_dominated_sort(objectives, pair);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<ObjectiveVector> values;
    values.reserve(fronts[f].size());
    for (std::size_t i : fronts[f]) values.push_back(objectives[i]);
    const auto dist = crowding_distance(values, pair);
    for (std::size_t k = 0; k < fronts[f].size(); ++k)
      out[fronts[f][k]] = {fronts[f][k], static_cast<int>(f), dist[k]};
  }
  return out;
}

std::vector<RankedMember> select_survivors(std::vector<RankedMember> ranked, std::size_t count) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedMember& a, const RankedMember& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
  });
  if (ranked.size() > count) ranked.resize(count);
  return ranked;
}

int tournament_winner(const RankedMember& a, const RankedMember& b, Rng& rng) {
  if (a.rank != b.rank) return a.rank < b.rank ? 0 : 1;
  if (a.crowding != b.crowding) return a.crowding > b.crowding ? 0 : 1;
  return rng.bernoulli(0.5) ? 0 : 1;
}

std::vector<std::size_t> tournament_select(std::span<const RankedMember> pool, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  const std::size_t m = pool.size();
  for (std::size_t t = 0; t < count; ++t) {
    if (m == 1) {
      out.push_back(0);
      continue;
    }
    const std::size_t i = rng.index(m);
    std::size_t j = rng.index(m - 1);
    if (j >= i) ++j;
    out.push_back(tournament_winner(pool[i], pool[j], rng) == 0 ? i : j);
  }
  return out;
}

// --- variation --------------------------------------------------------------

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, const SearchSpaceConfig& config,
                                       Segment cut, Rng& rng, const SampleOptions& options) {
  const GeneLayout layout(config);
  auto ga = to_genes(a, config);
  auto gb = to_genes(b, config);
  for (std::size_t i = layout.segment_begin(cut); i < ga.size(); ++i) std::swap(ga[i], gb[i]);
  auto ca = repair(std::move(ga), config, rng, options);
  auto cb = repair(std::move(gb), config, rng, options);
  return {std::move(ca), std::move(cb)};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b, const SearchSpaceConfig& config, double p_c,
                                    Rng& rng, const SampleOptions& options) {
  if (!rng.bernoulli(p_c)) return {a, b};
  // Four boundaries between the five segments.
  const auto cut = static_cast<Segment>(1 + rng.index(kSegments - 1));
  return crossover_at(a, b, config, cut, rng, options);
}

GeneVector mutate_genes(const GeneVector& genes, const GeneLayout& layout, double rate, Rng& rng) {
  GeneVector out = genes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int k = layout.slots()[i].categories;
    if (k < 2 || !rng.bernoulli(rate)) continue;
    int v = static_cast<int>(rng.index(static_cast<std::uint64_t>(k - 1)));
    if (v >= out[i]) ++v;
    out[i] = v;
  }
  return out;
}

Genome mutate(const Genome& genome, const SearchSpaceConfig& config, double rate, Rng& rng,
              const SampleOptions& options) {
  const GeneLayout layout(config);
  return repair(mutate_genes(to_genes(genome, config), layout, rate, rng), config, rng, options);
}

// --- archive ----------------------------------------------------------------

bool FrontArchive::contains(const BitVector& bits) const {
  return std::binary_search(sorted_keys_.begin(), sorted_keys_.end(), bits);
}

bool FrontArchive::add(EvaluatedCandidate candidate) {
  const auto pos = std::lower_bound(sorted_keys_.begin(), sorted_keys_.end(), candidate.bits);
  if (pos != sorted_keys_.end() && *pos == candidate.bits) return false;
  sorted_keys_.insert(pos, candidate.bits);

  const std::size_t idx = candidates_.size();
  const auto& obj = candidate.objectives;
  candidates_.push_back(std::move(candidate));
  for (std::size_t m : non_dominated_)
    if (constrained_dominates(candidates_[m].objectives, obj, pair_)) return true;
  std::erase_if(non_dominated_, [&](std::size_t m) {
    return constrained_dominates(candidates_[idx].objectives, candidates_[m].objectives, pair_);
  });
  non_dominated_.push_back(idx);
  return true;
}

void FrontArchive::assign_global_ranks() {
  std::vector<ObjectiveVector> objs;
  objs.reserve(candidates_.size());
  for (const auto& c : candidates_) objs.push_back(c.objectives);
  const auto ranked = rank_population(objs, pair_);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    candidates_[i].rank = ranked[i].rank;
    candidates_[i].crowding = ranked[i].crowding;
  }
}

// --- search -----------------------------------------------------------------

namespace {

class SearchRun {
public:
  SearchRun(const SearchSpaceConfig& config, const HardwareProfile& profile, const Nsga2Params& params,
            Evaluator& evaluator)
      : config_(config),
        profile_(profile),
        params_(params),
        evaluator_(evaluator),
        layout_(config),
        rng_(derive_seed(params.seed, 0x5eed)),
        archive_(params.objectives) {
    archive_.branch_filter = params.sampling.branch_filter;
    rate_ = params.mutation_rate.value_or(1.0 / static_cast<double>(layout_.n_var()));
  }

  FrontArchive run() {
    const std::size_t n = static_cast<std::size_t>(params_.population_size);
    try {
      initialize(n);
      snapshot(0);
      for (int gen = 0; gen < params_.generations; ++gen) {
        select_parents(n);
        breed(n, gen + 1);
        snapshot(gen + 1);
      }
    } catch (const InfeasibleSpace&) {
      throw;
    } catch (const std::exception& e) {
      archive_.aborted = true;
      archive_.error = e.what();
    }
    finish();
    return std::move(archive_);
  }

private:
  bool over_cap(const Genome& g) const {
    if (!params_.latency_cap) return false;
    return analytic_objectives(g, config_, profile_).latency_ms > *params_.latency_cap;
  }

  bool pending_contains(const BitVector& bits) const {
    return std::find(pending_bits_.begin(), pending_bits_.end(), bits) != pending_bits_.end();
  }

  void queue(Genome g, BitVector bits) {
    pending_bits_.push_back(bits);
    pending_.push_back({next_id_, std::move(g), derive_seed(params_.seed, next_id_)});
    ++next_id_;
  }

  /// Evaluates the queued jobs and archives them; returns archive indices.
  std::vector<std::size_t> flush(int generation) {
    const auto results = evaluator_.evaluate_batch(pending_);
    std::vector<std::size_t> added;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      EvaluatedCandidate c;
      c.id = pending_[i].id;
      c.genome = std::move(pending_[i].genome);
      c.bits = std::move(pending_bits_[i]);
      c.objectives = results[i];
      c.generation = generation;
      archive_.add(std::move(c));
      added.push_back(archive_.candidates().size() - 1);
    }
    pending_.clear();
    pending_bits_.clear();
    return added;
  }

  void initialize(std::size_t n) {
    const int budget =
        params_.init_attempt_budget > 0 ? params_.init_attempt_budget : std::max(2000, 100 * params_.population_size);
    std::uint64_t cap_rejects = 0;
    std::uint64_t dup_rejects = 0;
    int attempts = 0;
    while (pending_.size() < 2 * n) {
      if (attempts++ >= budget) {
        std::string msg = "could only assemble " + std::to_string(pending_.size()) + " of " + std::to_string(2 * n) +
                          " initial candidates in " + std::to_string(budget) + " attempts";
        if (params_.latency_cap)
          msg += "; latency cap S_max=" + std::to_string(*params_.latency_cap) + " ms rejected " +
                 std::to_string(cap_rejects) + " samples";
        msg += "; " + std::to_string(dup_rejects) + " duplicates";
        throw InfeasibleSpace(msg);
      }
      Genome g = sample(config_, rng_, params_.sampling);
      auto bits = encode(g, config_);
      if (pending_contains(bits)) {
        ++dup_rejects;
        continue;
      }
      if (over_cap(g)) {
        ++cap_rejects;
        continue;
      }
      queue(std::move(g), std::move(bits));
    }
    archive_.stats.cap_rejections += cap_rejects;
    archive_.stats.duplicate_rejections += dup_rejects;
    archive_.stats.init_evaluations += pending_.size();
    const auto added = flush(0);
    parents_.assign(added.begin(), added.begin() + static_cast<std::ptrdiff_t>(n));
    offspring_.assign(added.begin() + static_cast<std::ptrdiff_t>(n), added.end());
  }

  void select_parents(std::size_t n) {
    std::vector<std::size_t> pool = parents_;
    pool.insert(pool.end(), offspring_.begin(), offspring_.end());
    std::vector<ObjectiveVector> objs;
    objs.reserve(pool.size());
    for (std::size_t i : pool) objs.push_back(archive_.candidates()[i].objectives);
    auto survivors = select_survivors(rank_population(objs, params_.objectives), n);
    parents_.clear();
    ranked_parents_.clear();
    for (auto& m : survivors) {
      parents_.push_back(pool[m.index]);
      m.index = parents_.size() - 1;
      ranked_parents_.push_back(m);
    }
  }

  Genome next_child() {
    if (children_.empty()) {
      const auto picks = tournament_select(ranked_parents_, 2, rng_);
      const auto& a = archive_.candidates()[parents_[picks[0]]].genome;
      const auto& b = archive_.candidates()[parents_[picks[1]]].genome;
      auto [ca, cb] = crossover(a, b, config_, params_.crossover_prob, rng_, params_.sampling);
      children_.push_back(mutate(ca, config_, rate_, rng_, params_.sampling));
      children_.push_back(mutate(cb, config_, rate_, rng_, params_.sampling));
    }
    Genome g = std::move(children_.front());
    children_.pop_front();
    return g;
  }

  void breed(std::size_t n, int generation) {
    offspring_.clear();
    const int retry = params_.slot_retry_budget;
    const int fresh = params_.slot_fresh_budget;
    while (offspring_.size() < n) {
      while (offspring_.size() + pending_.size() < n) {
        bool placed = false;
        for (int attempt = 0; attempt < retry + fresh && !placed; ++attempt) {
          Genome g = attempt < retry ? next_child() : sample(config_, rng_, params_.sampling);
          auto bits = encode(g, config_);
          if (archive_.contains(bits) || pending_contains(bits)) {
            ++archive_.stats.duplicate_rejections;
            continue;
          }
          if (over_cap(g)) {
            ++archive_.stats.cap_rejections;
            continue;
          }
          if (attempt >= retry) ++archive_.stats.fresh_fills;
          queue(std::move(g), std::move(bits));
          placed = true;
        }
        if (!placed) {
          // Neighbourhood exhausted: carry a parent over without re-evaluation.
          const auto pick = tournament_select(ranked_parents_, 1, rng_);
          offspring_.push_back(parents_[pick[0]]);
          ++archive_.stats.parent_reuses;
        }
      }
      archive_.stats.offspring_evaluations += pending_.size();
      for (std::size_t idx : flush(generation)) {
        const double score = archive_.candidates()[idx].objectives.score;
        if (params_.score_min && !(score > *params_.score_min)) {
          ++archive_.stats.floor_rejections;
          continue;
        }
        offspring_.push_back(idx);
      }
    }
  }

  void snapshot(int generation) {
    GenerationSnapshot s;
    s.generation = generation;
    for (std::size_t i : parents_) s.population.push_back(archive_.candidates()[i].id);
    for (std::size_t i : archive_.non_dominated()) s.front.push_back(archive_.candidates()[i].id);
    std::sort(s.front.begin(), s.front.end());
    archive_.history.push_back(std::move(s));
  }

  void finish() {
    archive_.assign_global_ranks();
    std::vector<std::size_t> front = archive_.non_dominated();
    std::sort(front.begin(), front.end());
    std::stable_sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
      return archive_.candidates()[a].crowding > archive_.candidates()[b].crowding;
    });
    front.resize(std::min(front.size(), static_cast<std::size_t>(params_.top_k)));
    archive_.top_k = std::move(front);
  }

  const SearchSpaceConfig& config_;
  const HardwareProfile& profile_;
  const Nsga2Params& params_;
  Evaluator& evaluator_;
  GeneLayout layout_;
  Rng rng_;
  double rate_ = 0.0;
  FrontArchive archive_;
  std::uint64_t next_id_ = 0;
  std::vector<EvalJob> pending_;
  std::vector<BitVector> pending_bits_;
  std::vector<std::size_t> parents_;
  std::vector<RankedMember> ranked_parents_;
  std::vector<std::size_t> offspring_;
  std::deque<Genome> children_;
};

}  // namespace

FrontArchive search(const SearchSpaceConfig& config, const HardwareProfile& profile, const Nsga2Params& params,
                    Evaluator& evaluator) {
  config.validate();
  profile.validate();
  params.validate();
  return SearchRun(config, profile, params, evaluator).run();
}

namespace {

json distance_json(double d) { return std::isinf(d) ? json(nullptr) : json(d); }

}  // namespace

json archive_to_json(const FrontArchive& archive) {
  std::vector<bool> on_front(archive.candidates().size(), false);
  for (std::size_t i : archive.non_dominated()) on_front[i] = true;

  json candidates = json::array();
  for (std::size_t i = 0; i < archive.candidates().size(); ++i) {
    const auto& c = archive.candidates()[i];
    candidates.push_back({{"id", c.id},
                          {"generation", c.generation},
                          {"genome", genome_to_json(c.genome)},
                          {"encoding", bits_to_string(c.bits)},
                          {"objectives", objectives_to_json(c.objectives)},
                          {"rank", c.rank},
                          {"crowding", distance_json(c.crowding)},
                          {"non_dominated", static_cast<bool>(on_front[i])}});
  }
  auto ids = [&](const std::vector<std::size_t>& idx) {
    json out = json::array();
    for (std::size_t i : idx) out.push_back(archive.candidates()[i].id);
    return out;
  };
  std::vector<std::size_t> front = archive.non_dominated();
  std::sort(front.begin(), front.end());
  json history = json::array();
  for (const auto& s : archive.history)
    history.push_back({{"generation", s.generation}, {"population", s.population}, {"front", s.front}});
  const auto& st = archive.stats;
  return json{{"objective", to_string(archive.pair().axis)},
              {"branch_filter", archive.branch_filter ? json(*archive.branch_filter) : json(nullptr)},
              {"aborted", archive.aborted},
              {"error", archive.aborted ? json(archive.error) : json(nullptr)},
              {"stats",
               {{"init_evaluations", st.init_evaluations},
                {"offspring_evaluations", st.offspring_evaluations},
                {"cap_rejections", st.cap_rejections},
                {"duplicate_rejections", st.duplicate_rejections},
                {"floor_rejections", st.floor_rejections},
                {"fresh_fills", st.fresh_fills},
                {"parent_reuses", st.parent_reuses}}},
              {"front", ids(front)},
              {"top_k", ids(archive.top_k)},
              {"candidates", std::move(candidates)},
              {"history", std::move(history)}};
}

}  // namespace mbnas
