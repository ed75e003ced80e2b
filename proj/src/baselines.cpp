#include "mbnas/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mbnas/errors.hpp"

namespace mbnas {

using nlohmann::json;

std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> objectives, ObjectivePair pair) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < objectives.size() && !dominated; ++j)
      dominated = j != i && constrained_dominates(objectives[j], objectives[i], pair);
    if (!dominated) out.push_back(i);
  }
  return out;
}

namespace {

void finalize(BaselineResult& r, ObjectivePair pair) {
  std::vector<ObjectiveVector> objs;
  objs.reserve(r.pool.size());
  for (const auto& c : r.pool) objs.push_back(c.objectives);
  r.non_dominated = non_dominated_indices(objs, pair);
  const auto ranked = rank_population(objs, pair);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    r.pool[i].rank = ranked[i].rank;
    r.pool[i].crowding = ranked[i].crowding;
  }
}

EvaluatedCandidate make_candidate(std::uint64_t id, Genome g, const SearchSpaceConfig& config, ObjectiveVector v,
                                  int generation) {
  EvaluatedCandidate c;
  c.id = id;
  c.bits = encode(g, config);
  c.genome = std::move(g);
  c.objectives = v;
  c.generation = generation;
  return c;
}

}  // namespace

BaselineResult random_baseline(const SearchSpaceConfig& config, int n, Evaluator& evaluator, std::uint64_t seed,
                               ObjectivePair pair, const SampleOptions& options) {
  if (n < 1) throw InvalidConfig("random baseline needs n >= 1");
  Rng rng(derive_seed(seed, 0xba5e));
  std::vector<EvalJob> jobs;
  jobs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint64_t>(i);
    jobs.push_back({id, sample(config, rng, options), derive_seed(seed, id)});
  }
  const auto results = evaluator.evaluate_batch(jobs);
  BaselineResult r;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    r.pool.push_back(make_candidate(jobs[i].id, std::move(jobs[i].genome), config, results[i], 0));
  finalize(r, pair);
  return r;
}

void LocalSearchParams::validate() const {
  if (seeds < 1 || iterations < 1 || neighbors < 1)
    throw InvalidConfig("local search seeds, iterations and neighbors must all be >= 1");
}

BaselineResult local_search(const SearchSpaceConfig& config, const LocalSearchParams& params, Evaluator& evaluator,
                            std::uint64_t seed, const SampleOptions& options) {
  params.validate();
  BaselineResult r;
  std::uint64_t next_id = 0;
  auto evaluate = [&](std::vector<Genome> genomes, int iteration) {
    std::vector<EvalJob> jobs;
    for (auto& g : genomes) {
      jobs.push_back({next_id, std::move(g), derive_seed(seed, next_id)});
      ++next_id;
    }
    const auto results = evaluator.evaluate_batch(jobs);
    const std::size_t first = r.pool.size();
    for (std::size_t i = 0; i < jobs.size(); ++i)
      r.pool.push_back(make_candidate(jobs[i].id, std::move(jobs[i].genome), config, results[i], iteration));
    return first;
  };

  for (int s = 0; s < params.seeds; ++s) {
    const std::uint64_t stream = derive_seed(seed, 1000 + static_cast<std::uint64_t>(s));
    std::size_t incumbent = evaluate({sample(config, stream, options)}, 0);
    for (int it = 1; it <= params.iterations; ++it) {
      const auto& inc = r.pool[incumbent];
      auto cands = neighbors(inc.genome, config, derive_seed(stream, static_cast<std::uint64_t>(it)), params.neighbors);
      const std::size_t first = evaluate(std::move(cands), it);
      const auto& inc_obj = r.pool[incumbent].objectives;
      std::optional<std::size_t> best;
      for (std::size_t i = first; i < r.pool.size(); ++i) {
        const auto& o = r.pool[i].objectives;
        if (!o.feasible || !dominates(o, inc_obj, params.acceptance)) continue;
        // Among several dominating neighbors prefer one not dominated by another.
        if (!best || dominates(o, r.pool[*best].objectives, params.acceptance)) best = i;
      }
      if (best) {
        incumbent = *best;
        ++r.moves;
      } else {
        ++r.stalls;
      }
    }
  }
  finalize(r, params.acceptance);
  return r;
}

std::vector<EvaluatedCandidate> select_closest_by_flops(std::span<const EvaluatedCandidate> front,
                                                        std::span<const double> targets) {
  if (front.empty()) throw EmptyFront("cannot select from an empty front");
  std::vector<EvaluatedCandidate> out;
  for (double t : targets) {
    const EvaluatedCandidate* best = &front[0];
    for (const auto& c : front) {
      const double dc = std::abs(c.objectives.flops_g - t);
      const double db = std::abs(best->objectives.flops_g - t);
      if (dc < db ||
          (dc == db && (c.objectives.latency_ms < best->objectives.latency_ms ||
                        (c.objectives.latency_ms == best->objectives.latency_ms && c.bits < best->bits))))
        best = &c;
    }
    out.push_back(*best);
  }
  return out;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("kendall_tau: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw LengthMismatch("kendall_tau needs at least two observations");
  long long score = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const double s = dx * dy;
      if (s > 0) ++score;
      else if (s < 0) --score;
    }
  }
  return static_cast<double>(score) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("pearson_r: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw LengthMismatch("pearson_r needs at least two observations");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson_r: a column has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::pair<std::string, double>> read_value_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read " + path);
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::istringstream ls(line);
    std::string id, value;
    if (!(ls >> id >> value)) throw InvalidConfig(path + ": expected two columns in '" + line + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      out.emplace_back(id, v);
    } catch (const std::exception&) {
      if (!first) throw InvalidConfig(path + ": non-numeric value '" + value + "'");
    }
    first = false;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> align_by_id(const std::vector<std::pair<std::string, double>>& a,
                                                                const std::vector<std::pair<std::string, double>>& b) {
  std::map<std::string, double> lookup;
  for (const auto& [id, v] : b)
    if (!lookup.emplace(id, v).second) throw LengthMismatch("duplicate id '" + id + "'");
  if (a.size() != b.size()) throw LengthMismatch("value files list different numbers of ids");
  std::vector<double> xs, ys;
  for (const auto& [id, v] : a) {
    const auto it = lookup.find(id);
    if (it == lookup.end()) throw LengthMismatch("id '" + id + "' missing from the second file");
    xs.push_back(v);
    ys.push_back(it->second);
  }
  return {xs, ys};
}

json baseline_to_json(const BaselineResult& result, ObjectivePair pair, const std::string& kind) {
  std::vector<bool> on_front(result.pool.size(), false);
  for (std::size_t i : result.non_dominated) on_front[i] = true;
  json candidates = json::array();
  json front = json::array();
  for (std::size_t i = 0; i < result.pool.size(); ++i) {
    const auto& c = result.pool[i];
    candidates.push_back({{"id", c.id},
                          {"generation", c.generation},
                          {"genome", genome_to_json(c.genome)},
                          {"encoding", bits_to_string(c.bits)},
                          {"objectives", objectives_to_json(c.objectives)},
                          {"rank", c.rank},
                          {"crowding", std::isinf(c.crowding) ? json(nullptr) : json(c.crowding)},
                          {"non_dominated", static_cast<bool>(on_front[i])}});
    if (on_front[i]) front.push_back(c.id);
  }
  return json{{"baseline", kind},
              {"objective", to_string(pair.axis)},
              {"stats", {{"evaluations", result.pool.size()}, {"moves", result.moves}, {"stalls", result.stalls}}},
              {"front", std::move(front)},
              {"candidates", std::move(candidates)}};
}

}  // namespace mbnas
