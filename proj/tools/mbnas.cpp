// mbnas: command-line front end for the architecture search engine.
//
// Exit codes: 0 success, 2 bad flags or inputs, 3 evaluator failure,
// 4 search space infeasible under the given cap.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbnas/architecture.hpp"
#include "mbnas/baselines.hpp"
#include "mbnas/cost_model.hpp"
#include "mbnas/errors.hpp"
#include "mbnas/evaluator.hpp"
#include "mbnas/external.hpp"
#include "mbnas/nsga2.hpp"
#include "mbnas/search_space.hpp"

namespace {

using nlohmann::json;
using namespace mbnas;

constexpr const char* kEngineVersion = "1.0.0";

enum ExitCode { kOk = 0, kBadInput = 2, kEvaluatorFailed = 3, kInfeasible = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw UsageError(path + " is not valid JSON");
  return j;
}

/// Writes through a temporary file and renames, so readers never see a
/// partial file.
void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw UsageError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// --- evaluators -------------------------------------------------------------

/// Same objectives for every genome; a diagnostic for baseline bookkeeping.
class ConstantEvaluator final : public Evaluator {
public:
  explicit ConstantEvaluator(double score) : score_(score) {}
  ObjectiveVector evaluate(const EvalJob&) override {
    ObjectiveVector v;
    v.score = score_;
    return v;
  }

private:
  double score_;
};

struct EvaluatorFlags {
  std::string spec = "proxy";
  int workers = 1;
  double proxy_noise = 0.0;
  double timeout_s = 300.0;
  bool calibrate = true;

  json to_json() const {
    return json{{"evaluator", spec}, {"workers", workers}, {"proxy_noise", proxy_noise},
                {"timeout_s", timeout_s}, {"calibrate", calibrate}};
  }
  static EvaluatorFlags from_json(const json& j) {
    EvaluatorFlags f;
    f.spec = j.at("evaluator").get<std::string>();
    f.workers = j.at("workers").get<int>();
    f.proxy_noise = j.at("proxy_noise").get<double>();
    f.timeout_s = j.at("timeout_s").get<double>();
    f.calibrate = j.at("calibrate").get<bool>();
    return f;
  }
};

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorFlags& f, const SearchSpaceConfig& config,
                                          const HardwareProfile& profile) {
  if (f.spec == "proxy") {
    ProxyParams p;
    p.noise = f.proxy_noise;
    return std::make_unique<ProxyEvaluator>(config, profile, p);
  }
  if (f.spec.rfind("exec:", 0) == 0) {
    ExternalOptions o;
    o.workers = f.workers;
    o.timeout = std::chrono::milliseconds(static_cast<long long>(f.timeout_s * 1000.0));
    o.calibrate = f.calibrate;
    return std::make_unique<ExternalEvaluator>(f.spec.substr(5), config, profile, o);
  }
  if (f.spec.rfind("constant:", 0) == 0) return std::make_unique<ConstantEvaluator>(std::stod(f.spec.substr(9)));
  throw UsageError("--evaluator must be proxy, exec:<command> or constant:<score>");
}

// --- search -----------------------------------------------------------------

struct SearchFlags {
  std::string space, profile, out;
  int pop = 40;
  int gens = 20;
  double pc = 0.9;
  std::optional<double> mutation_rate;
  std::string branches = "all";
  std::string objectives = "latency";
  std::optional<double> lat_cap;
  std::optional<double> score_min;
  std::optional<std::uint64_t> seed;
  int top_k = 5;
  EvaluatorFlags eval;
  bool json_out = false;
};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

json search_params_json(const SearchFlags& f) {
  json j{{"pop", f.pop},
         {"gens", f.gens},
         {"pc", f.pc},
         {"mutation_rate", optional_json(f.mutation_rate)},
         {"branches", f.branches},
         {"objectives", f.objectives},
         {"lat_cap", optional_json(f.lat_cap)},
         {"score_min", optional_json(f.score_min)},
         {"seed", *f.seed},
         {"top_k", f.top_k}};
  j.update(f.eval.to_json());
  return j;
}

std::vector<int> branch_settings(const std::string& s, const SearchSpaceConfig& config) {
  if (s == "all") {
    std::vector<int> out;
    for (int b = 1; b <= config.max_branches(); ++b) out.push_back(b);
    return out;
  }
  if (s == "1" || s == "2" || s == "3") {
    const int b = std::stoi(s);
    if (b > config.max_branches()) throw UsageError("--branches " + s + " does not fit num_layers");
    return {b};
  }
  throw UsageError("--branches must be 1, 2, 3 or all");
}

int run_search(const SearchFlags& f, const SearchSpaceConfig& config, const HardwareProfile& profile,
               json manifest) {
  const auto pair = ObjectivePair{minimize_axis_from_string(f.objectives)};
  auto evaluator = make_evaluator(f.eval, config, profile);
  manifest["started_at"] = utc_now();

  json runs = json::array();
  json run_stats = json::array();
  bool aborted = false;
  for (int b : branch_settings(f.branches, config)) {
    Nsga2Params p;
    p.population_size = f.pop;
    p.generations = f.gens;
    p.crossover_prob = f.pc;
    p.mutation_rate = f.mutation_rate;
    p.latency_cap = f.lat_cap;
    p.score_min = f.score_min;
    p.objectives = pair;
    p.seed = derive_seed(*f.seed, static_cast<std::uint64_t>(b));
    p.top_k = f.top_k;
    p.sampling.branch_filter = b;
    const auto archive = search(config, profile, p, *evaluator);
    runs.push_back(archive_to_json(archive));
    const auto& st = archive.stats;
    run_stats.push_back({{"branches", b},
                         {"init_evaluations", st.init_evaluations},
                         {"offspring_evaluations", st.offspring_evaluations},
                         {"cap_rejections", st.cap_rejections},
                         {"duplicate_rejections", st.duplicate_rejections},
                         {"floor_rejections", st.floor_rejections},
                         {"fresh_fills", st.fresh_fills},
                         {"parent_reuses", st.parent_reuses}});
    if (!f.json_out) {
      std::cout << "branches=" << b << " evaluations=" << st.evaluations() << " (init " << st.init_evaluations
                << ", offspring " << st.offspring_evaluations << ") cap_rejections=" << st.cap_rejections
                << " front=" << archive.non_dominated().size() << "\n";
      for (std::size_t i : archive.top_k) {
        const auto& c = archive.candidates()[i];
        std::cout << "  id " << std::setw(5) << c.id << "  score " << std::fixed << std::setprecision(3)
                  << c.objectives.score << "  latency_ms " << c.objectives.latency_ms << "  flops_g "
                  << c.objectives.flops_g << "  params_m " << c.objectives.params_m << "\n";
        std::cout.unsetf(std::ios::fixed);
      }
    }
    if (archive.aborted) {
      std::cerr << "evaluation stage failed (branches=" << b << "): " << archive.error << "\n";
      aborted = true;
      break;
    }
  }

  const json export_doc{{"version", 1}, {"engine_version", kEngineVersion}, {"runs", runs}};
  write_atomic(f.out, export_doc.dump(2) + "\n");
  manifest["finished_at"] = utc_now();
  manifest["runs"] = run_stats;
  manifest["aborted"] = aborted;
  write_atomic(f.out + ".manifest.json", manifest.dump(2) + "\n");
  if (f.json_out) std::cout << json{{"out", f.out}, {"runs", run_stats}, {"aborted", aborted}}.dump() << "\n";
  return aborted ? kEvaluatorFailed : kOk;
}

int cmd_search(SearchFlags f) {
  const json config_json = read_json(f.space);
  const json profile_json = read_json(f.profile);
  const auto config = config_from_json(config_json);
  const auto profile = profile_from_json(profile_json);
  if (!f.seed) {
    f.seed = fresh_seed();
    std::cerr << "seed: " << *f.seed << "\n";
  }
  json manifest{{"command", "search"},
                {"engine_version", kEngineVersion},
                {"config_path", f.space},
                {"profile_path", f.profile},
                {"config", config_to_json(config)},
                {"profile", profile_to_json(profile)},
                {"params", search_params_json(f)}};
  return run_search(f, config, profile, std::move(manifest));
}

int cmd_replay(const std::string& manifest_path, const std::string& out, bool json_out) {
  const json m = read_json(manifest_path);
  if (m.value("command", "") != "search") throw UsageError("only search manifests can be replayed");
  const auto config = config_from_json(m.at("config"));
  const auto profile = profile_from_json(m.at("profile"));
  const auto& p = m.at("params");
  SearchFlags f;
  f.space = m.at("config_path").get<std::string>();
  f.profile = m.at("profile_path").get<std::string>();
  f.out = out;
  f.pop = p.at("pop").get<int>();
  f.gens = p.at("gens").get<int>();
  f.pc = p.at("pc").get<double>();
  f.mutation_rate = optional_from(p.at("mutation_rate"));
  f.branches = p.at("branches").get<std::string>();
  f.objectives = p.at("objectives").get<std::string>();
  f.lat_cap = optional_from(p.at("lat_cap"));
  f.score_min = optional_from(p.at("score_min"));
  f.seed = p.at("seed").get<std::uint64_t>();
  f.top_k = p.at("top_k").get<int>();
  f.eval = EvaluatorFlags::from_json(p);
  f.json_out = json_out;
  json manifest = m;
  manifest.erase("runs");
  manifest["replayed_from"] = manifest_path;
  return run_search(f, config, profile, std::move(manifest));
}

// --- cost -------------------------------------------------------------------

struct CostFlags {
  std::string genome, space, profile;
  bool table1 = false;
  int attention_dim = 48;
  bool json_out = false;
};

int cmd_cost_table1(const CostFlags& f, const HardwareProfile& profile) {
  // Reference input 1 x 256 x 32 x 64.
  constexpr std::uint64_t C = 256, H = 32, W = 64;
  const auto d = static_cast<std::uint64_t>(f.attention_dim);
  struct Row {
    const char* name;
    OpKind kind;
    OpCost cost;
    const char* rf;
    const char* scale;
  };
  const Row rows[] = {
      {"Convolution", OpKind::Fuse3x3, conv_cost(C, C, 3, H, W), "1", "Linear"},
      {"Lightweight Convolution", OpKind::LightweightConv, lightweight_conv_cost(C, C, H, W), "2", "Linear"},
      {"Transformer", OpKind::MemEffSelfAttention, transformer_cost(C, H, W), "Max", "Quadratic"},
      {"Memory-efficient Self-attention", OpKind::MemEffSelfAttention, attention_cost(C, d, H, W), "Max", "Quadratic"},
  };
  json out = json::array();
  if (!f.json_out) {
    std::cout << "input 1x256x32x64, attention bottleneck d=" << d << ", transformer FFN ratio 4\n";
    std::cout << std::left << std::setw(34) << "operation" << std::right << std::setw(11) << "FLOPs(G)"
              << std::setw(12) << "Params(M)" << std::setw(14) << "est_ms" << std::setw(6) << "RF"
              << "  scale\n";
  }
  for (const auto& r : rows) {
    ModelCost mc;
    mc.per_op.push_back({0, r.kind, r.cost});
    mc.flops = r.cost.flops;
    const double ms = estimate_latency(mc, profile);
    const double g = static_cast<double>(r.cost.flops) / 1e9;
    const double m = static_cast<double>(r.cost.params) / 1e6;
    out.push_back({{"operation", r.name}, {"flops", r.cost.flops}, {"params", r.cost.params}, {"flops_g", g},
                   {"params_m", m}, {"est_latency_ms", ms}, {"rf", r.rf}, {"scale", r.scale}});
    if (!f.json_out)
      std::cout << std::left << std::setw(34) << r.name << std::right << std::fixed << std::setprecision(3)
                << std::setw(11) << g << std::setw(12) << m << std::setw(14) << ms << std::setw(6) << r.rf << "  "
                << r.scale << "\n";
  }
  if (f.json_out) std::cout << json{{"table", out}}.dump() << "\n";
  return kOk;
}

int cmd_cost(const CostFlags& f) {
  const auto profile = profile_from_json(read_json(f.profile));
  if (f.table1) return cmd_cost_table1(f, profile);
  if (f.genome.empty() || f.space.empty()) throw UsageError("cost needs --genome and --space (or --table1)");
  const auto config = config_from_json(read_json(f.space));
  const auto genome = genome_from_json(read_json(f.genome));
  if (const auto vs = validate(genome, config); !vs.empty()) {
    std::cerr << "invalid genome:\n";
    for (const auto& v : vs) std::cerr << "  " << describe(v) << "\n";
    return kBadInput;
  }
  const auto ir = decode_to_ir(genome, config);
  const auto cost = aggregate(ir);
  const auto mem = check_memory(cost, profile);
  const double ms = estimate_latency(cost, profile);

  std::array<OpCost, kOpKindCount> by_kind{};
  std::array<int, kOpKindCount> count{};
  for (const auto& e : cost.per_op) {
    by_kind[static_cast<std::size_t>(e.kind)] += e.cost;
    ++count[static_cast<std::size_t>(e.kind)];
  }
  if (f.json_out) {
    json breakdown = json::array();
    for (const auto& e : cost.per_op) {
      const auto& op = ir.ops[static_cast<std::size_t>(e.op_id)];
      breakdown.push_back({{"id", e.op_id}, {"kind", to_string(e.kind)}, {"layer", op.layer}, {"row", op.row},
                           {"c_in", op.c_in}, {"c_out", op.c_out}, {"height", op.height}, {"width", op.width},
                           {"flops", e.cost.flops}, {"params", e.cost.params}, {"act_mem", e.cost.act_mem}});
    }
    std::cout << json{{"flops", cost.flops}, {"params", cost.params}, {"flops_g", cost.flops_g()},
                      {"params_m", cost.params_m()}, {"peak_act_mem", cost.peak_act_mem},
                      {"peak_mem_mb", mem.required_mb}, {"memory_ok", mem.pass}, {"est_latency_ms", ms},
                      {"breakdown", breakdown}}
                     .dump()
              << "\n";
    return kOk;
  }
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "flops_g        " << cost.flops_g() << "\n"
            << "params_m       " << cost.params_m() << "\n"
            << "peak_mem_mb    " << mem.required_mb << (mem.pass ? "" : "  (over budget)") << "\n"
            << "est_latency_ms " << ms << "\n\n";
  std::cout << std::left << std::setw(22) << "kind" << std::right << std::setw(6) << "n" << std::setw(14)
            << "FLOPs(G)" << std::setw(12) << "Params(M)\n";
  for (int k = 0; k < kOpKindCount; ++k) {
    if (count[static_cast<std::size_t>(k)] == 0) continue;
    const auto& c = by_kind[static_cast<std::size_t>(k)];
    std::cout << std::left << std::setw(22) << to_string(static_cast<OpKind>(k)) << std::right << std::setw(6)
              << count[static_cast<std::size_t>(k)] << std::setw(14) << static_cast<double>(c.flops) / 1e9
              << std::setw(12) << static_cast<double>(c.params) / 1e6 << "\n";
  }
  return kOk;
}

// --- baseline ---------------------------------------------------------------

struct BaselineFlags {
  std::string space, profile, out;
  std::string objectives;
  std::optional<std::uint64_t> seed;
  EvaluatorFlags eval;
  std::string branches = "any";
  int n = 100;
  LocalSearchParams local;
  bool json_out = false;
};

int cmd_baseline(BaselineFlags f, const std::string& kind) {
  const json config_json = read_json(f.space);
  const json profile_json = read_json(f.profile);
  const auto config = config_from_json(config_json);
  const auto profile = profile_from_json(profile_json);
  if (!f.seed) {
    f.seed = fresh_seed();
    std::cerr << "seed: " << *f.seed << "\n";
  }
  SampleOptions opts;
  if (f.branches != "any") opts.branch_filter = branch_settings(f.branches, config).front();
  auto evaluator = make_evaluator(f.eval, config, profile);
  const std::string started = utc_now();

  BaselineResult result;
  ObjectivePair pair;
  if (kind == "random") {
    pair.axis = minimize_axis_from_string(f.objectives.empty() ? "latency" : f.objectives);
    result = random_baseline(config, f.n, *evaluator, *f.seed, pair, opts);
  } else {
    if (!f.objectives.empty()) f.local.acceptance.axis = minimize_axis_from_string(f.objectives);
    pair = f.local.acceptance;
    result = local_search(config, f.local, *evaluator, *f.seed, opts);
  }
  const json export_doc{{"version", 1}, {"engine_version", kEngineVersion},
                        {"runs", json::array({baseline_to_json(result, pair, kind)})}};
  write_atomic(f.out, export_doc.dump(2) + "\n");
  json params{{"kind", kind}, {"objectives", to_string(pair.axis)}, {"seed", *f.seed}, {"branches", f.branches}};
  if (kind == "random")
    params["n"] = f.n;
  else
    params.update({{"seeds", f.local.seeds}, {"iters", f.local.iterations}, {"neighbors", f.local.neighbors}});
  params.update(f.eval.to_json());
  const json manifest{{"command", "baseline"},
                      {"engine_version", kEngineVersion},
                      {"config_path", f.space},
                      {"profile_path", f.profile},
                      {"config", config_to_json(config)},
                      {"profile", profile_to_json(profile)},
                      {"params", params},
                      {"started_at", started},
                      {"finished_at", utc_now()},
                      {"evaluations", result.pool.size()}};
  write_atomic(f.out + ".manifest.json", manifest.dump(2) + "\n");
  if (f.json_out)
    std::cout << json{{"out", f.out}, {"pool", result.pool.size()}, {"front", result.non_dominated.size()},
                      {"moves", result.moves}, {"stalls", result.stalls}}
                     .dump()
              << "\n";
  else
    std::cout << kind << " baseline: pool " << result.pool.size() << ", non-dominated " << result.non_dominated.size()
              << (kind == "local" ? ", moves " + std::to_string(result.moves) + ", stalls " +
                                        std::to_string(result.stalls)
                                  : std::string())
              << "\n";
  return kOk;
}

// --- correlate --------------------------------------------------------------

int cmd_correlate(const std::string& x_path, const std::string& y_path, bool json_out) {
  const auto x = read_value_table(x_path);
  const auto y = read_value_table(y_path);
  std::pair<std::vector<double>, std::vector<double>> aligned;
  try {
    aligned = align_by_id(x, y);
  } catch (const LengthMismatch& e) {
    throw UsageError(std::string("misaligned value files: ") + e.what());
  }
  const double tau = kendall_tau(aligned.first, aligned.second);
  const double rho = pearson_r(aligned.first, aligned.second);
  if (json_out) {
    std::cout << json{{"n", aligned.first.size()}, {"kendall_tau", tau}, {"pearson_r", rho}}.dump() << "\n";
  } else {
    std::cout << std::fixed << std::setprecision(4) << "n            " << aligned.first.size() << "\n"
              << "kendall_tau  " << tau << "\n"
              << "pearson_r    " << rho << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-branch hybrid convolution/attention architecture search"};
  app.require_subcommand(1);

  SearchFlags sf;
  auto* search_cmd = app.add_subcommand("search", "Run constrained NSGA-II and export the front");
  search_cmd->add_option("--space", sf.space, "Search-space config (JSON)")->required();
  search_cmd->add_option("--profile", sf.profile, "Hardware profile (JSON)")->required();
  search_cmd->add_option("--out", sf.out, "Front export path")->required();
  search_cmd->add_option("--pop", sf.pop, "Population size")->capture_default_str();
  search_cmd->add_option("--gens", sf.gens, "Generations")->capture_default_str();
  search_cmd->add_option("--pc", sf.pc, "Crossover probability")->capture_default_str();
  search_cmd->add_option("--mutation-rate", sf.mutation_rate, "Per-gene mutation rate (default 1/n_var)");
  search_cmd->add_option("--branches", sf.branches, "1, 2, 3 or all")->capture_default_str();
  search_cmd->add_option("--objectives", sf.objectives, "Minimized axis: latency, flops or params")
      ->capture_default_str();
  search_cmd->add_option("--lat-cap", sf.lat_cap, "Latency cap in ms");
  search_cmd->add_option("--score-min", sf.score_min, "Score floor for offspring");
  search_cmd->add_option("--seed", sf.seed, "Master seed");
  search_cmd->add_option("--top-k", sf.top_k, "Front members returned by crowding distance")->capture_default_str();
  search_cmd->add_option("--evaluator", sf.eval.spec, "proxy, exec:<command> or constant:<score>")
      ->capture_default_str();
  search_cmd->add_option("--workers", sf.eval.workers, "External evaluator processes")->capture_default_str();
  search_cmd->add_option("--proxy-noise", sf.eval.proxy_noise, "Proxy noise amplitude")->capture_default_str();
  search_cmd->add_option("--timeout", sf.eval.timeout_s, "External evaluation timeout (s)")->capture_default_str();
  search_cmd->add_flag("!--no-calibrate", sf.eval.calibrate, "Do not ask evaluators to recalibrate BN");
  search_cmd->add_flag("--json", sf.json_out, "Machine-readable stdout");

  std::string manifest_path, replay_out;
  bool replay_json = false;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a search from its manifest");
  replay_cmd->add_option("--manifest", manifest_path)->required();
  replay_cmd->add_option("--out", replay_out)->required();
  replay_cmd->add_flag("--json", replay_json);

  CostFlags cf;
  auto* cost_cmd = app.add_subcommand("cost", "Cost report for a genome or the reference operator table");
  cost_cmd->add_option("--genome", cf.genome, "Genome file (JSON)");
  cost_cmd->add_option("--space", cf.space, "Search-space config (JSON)");
  cost_cmd->add_option("--profile", cf.profile, "Hardware profile (JSON)")->required();
  cost_cmd->add_flag("--table1", cf.table1, "Operator comparison at input 1x256x32x64");
  cost_cmd->add_option("--attention-dim", cf.attention_dim, "Attention bottleneck for --table1")
      ->capture_default_str();
  cost_cmd->add_flag("--json", cf.json_out);

  BaselineFlags bf;
  auto* baseline_cmd = app.add_subcommand("baseline", "Random or local-search baselines");
  baseline_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* c) {
    c->add_option("--space", bf.space)->required();
    c->add_option("--profile", bf.profile)->required();
    c->add_option("--out", bf.out)->required();
    c->add_option("--seed", bf.seed);
    c->add_option("--objectives", bf.objectives, "Minimized axis");
    c->add_option("--branches", bf.branches, "1, 2, 3 or any")->capture_default_str();
    c->add_option("--evaluator", bf.eval.spec)->capture_default_str();
    c->add_option("--workers", bf.eval.workers)->capture_default_str();
    c->add_option("--proxy-noise", bf.eval.proxy_noise)->capture_default_str();
    c->add_option("--timeout", bf.eval.timeout_s)->capture_default_str();
    c->add_flag("--json", bf.json_out);
  };
  auto* random_cmd = baseline_cmd->add_subcommand("random", "Prior-biased random sampling");
  add_common(random_cmd);
  random_cmd->add_option("--n", bf.n, "Samples")->capture_default_str();
  auto* local_cmd = baseline_cmd->add_subcommand("local", "Single-edit Pareto local search");
  add_common(local_cmd);
  local_cmd->add_option("--seeds", bf.local.seeds)->capture_default_str();
  local_cmd->add_option("--iters", bf.local.iterations)->capture_default_str();
  local_cmd->add_option("--neighbors", bf.local.neighbors)->capture_default_str();

  std::string x_path, y_path;
  bool corr_json = false;
  auto* corr_cmd = app.add_subcommand("correlate", "Kendall tau and Pearson r of two value files");
  corr_cmd->add_option("x", x_path, "First (id, value) file")->required();
  corr_cmd->add_option("y", y_path, "Second (id, value) file")->required();
  corr_cmd->add_flag("--json", corr_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }

  try {
    if (*search_cmd) return cmd_search(sf);
    if (*replay_cmd) return cmd_replay(manifest_path, replay_out, replay_json);
    if (*cost_cmd) return cmd_cost(cf);
    if (*random_cmd) return cmd_baseline(bf, "random");
    if (*local_cmd) return cmd_baseline(bf, "local");
    if (*corr_cmd) return cmd_correlate(x_path, y_path, corr_json);
  } catch (const UsageError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kBadInput;
  } catch (const InfeasibleSpace& e) {
    std::cerr << "initialization failed: " << e.what() << "\n";
    return kInfeasible;
  } catch (const EvaluatorError& e) {
    std::cerr << "evaluation failed: " << e.what() << "\n";
    return kEvaluatorFailed;
  } catch (const mbnas::Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
