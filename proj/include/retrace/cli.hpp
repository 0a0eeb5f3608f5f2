#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "retrace/config.hpp"
#include "retrace/metrics.hpp"
#include "retrace/record_io.hpp"
#include "retrace/remote.hpp"
#include "retrace/runtime.hpp"

namespace retrace {

// Exit codes: 0 success, 2 config error, 3 run error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRun = 3;

// ---------------------------------------------------------------------------
// Results files

inline void save_results(const std::string& path, const std::vector<EpisodeResult>& results) {
  RecordWriter w(path, "results", 1);
  for (const auto& r : results) w.write(to_json(r));
}

inline std::vector<EpisodeResult> load_results(const std::string& path) {
  RecordReader r(path, "results", 1);
  std::vector<EpisodeResult> out;
  nlohmann::json rec;
  while (r.next(rec)) out.push_back(episode_result_from_json(rec));
  return out;
}

// ---------------------------------------------------------------------------
// Run orchestration

namespace detail {

struct RunSetup {
  World world;
  std::unique_ptr<Oracle> oracle;
  BufferGraph buffer;
  MemoryStore memory;
  PolicyFactory make_policy;
  RunOptions opts;
};

inline RunSetup prepare(const RunConfig& config) {
  RunSetup s;
  s.world = load_world(config.world_path);
  if (config.oracle_mode == "scripted") {
    s.oracle = std::make_unique<ScriptedOracle>(ScriptedOracle::from_file(config.oracle_rules));
  } else {
    RemoteOracleConfig rc;
    rc.endpoint = config.oracle_endpoint;
    s.oracle = std::make_unique<RemoteOracle>(RemoteOracleConfig::from_env(rc));
  }
  s.buffer = BufferGraph(config.capacity, config.eviction);
  Embedder embedder;
  embedder.dim = config.embed_dim;
  s.memory = MemoryStore(embedder, config.dedup_threshold, config.min_similarity);
  if (config.policy == "oracle") {
    Oracle* oracle = s.oracle.get();
    const int budget = config.max_oracle_calls;
    s.make_policy = [oracle, budget] {
      return std::make_unique<OracleDrivenPolicy>(*oracle, budget);
    };
  } else {
    s.make_policy = [] { return std::make_unique<ScriptedPolicy>(); };
  }
  s.opts.horizon_cap = config.horizon_cap;
  s.opts.explore_cap = config.explore_cap;
  s.opts.k = config.k;
  s.opts.search.f_mode = config.f_mode;
  s.opts.search.heuristic_weight = config.heuristic_weight;
  s.opts.search.max_expansions = config.max_expansions;
  s.opts.search.candidate_cap = config.candidate_cap;
  s.opts.max_oracle_calls = config.max_oracle_calls;
  s.opts.parallelism = config.parallelism;
  s.opts.trust_ground_truth = config.trust_ground_truth;
  s.opts.ablate_reflection = config.ablate_reflection;
  s.opts.ablate_navigation = config.ablate_navigation;
  s.opts.validated_only = config.validated_only;
  return s;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-round task order: seeded Fisher-Yates (not std::shuffle, whose output
// is implementation-defined) so multi-round curves are reproducible anywhere.
inline std::vector<TaskSpec> round_order(const std::vector<TaskSpec>& tasks, std::uint64_t seed,
                                         int round) {
  std::vector<TaskSpec> out = tasks;
  std::uint64_t state = seed * 1000003ull + static_cast<std::uint64_t>(round);
  for (std::size_t i = out.size(); i > 1; --i) {
    const std::size_t j = splitmix64(state) % i;
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

inline void write_manifest(const RunConfig& config, const World& world,
                           const std::filesystem::path& dir) {
  nlohmann::json manifest = {{"seed", config.seed},
                             {"config_hash", config.config_hash()},
                             {"world_id", world.id},
                             {"oracle_mode", config.oracle_mode}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

inline void write_report_files(const MetricsReport& report, const std::filesystem::path& dir) {
  {
    std::ofstream out(dir / "report.json");
    out << to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "report.txt");
    out << render_report(report);
  }
}

enum class Phases { ExploreOnly, InferOnly, Both };

// Optional snapshots to resume from (both phases accept non-empty state).
struct ResumeState {
  std::string buffer_path;
  std::string memory_path;
};

inline int run_phases(const RunConfig& config, Phases phases, const ResumeState& resume = {}) {
  RunSetup s = prepare(config);
  if (!resume.buffer_path.empty()) s.buffer = BufferGraph::load(resume.buffer_path);
  if (!resume.memory_path.empty()) s.memory = MemoryStore::load(resume.memory_path);
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);

  std::vector<EpisodeResult> all_results;
  const bool baseline = config.agent == "baseline";
  for (int round = 1; round <= config.rounds; ++round) {
    s.opts.round = round;
    const auto tasks = round_order(s.world.tasks, config.seed, round);
    if (baseline) {
      auto res = run_baseline(s.world, tasks, s.make_policy, s.opts);
      all_results.insert(all_results.end(), res.begin(), res.end());
      continue;
    }
    if (phases != Phases::InferOnly) {
      auto res = run_exploration(s.world, tasks, s.make_policy, s.buffer, s.memory, *s.oracle,
                                 s.opts);
      all_results.insert(all_results.end(), res.begin(), res.end());
    }
    if (phases != Phases::ExploreOnly) {
      auto res =
          run_inference(s.world, tasks, s.make_policy, s.buffer, s.memory, *s.oracle, s.opts);
      all_results.insert(all_results.end(), res.begin(), res.end());
    }
  }

  if (!baseline) {
    s.buffer.save((dir / "buffer.rec").string());
    s.memory.persist((dir / "memory.rec").string());
  }
  save_results((dir / "results.rec").string(), all_results);
  MetricsReport report =
      build_report(all_results, s.world.id, baseline ? "baseline" : config.agent);
  // Exploration-only runs have no inference rounds; report over explore
  // episodes instead so the artifact is still inspectable.
  if (phases == Phases::ExploreOnly && !baseline) {
    std::vector<EpisodeResult> as_infer = all_results;
    for (auto& r : as_infer) r.phase = "infer";
    report = build_report(as_infer, s.world.id, config.agent + " (exploration)");
  }
  write_report_files(report, dir);
  write_manifest(config, s.world, dir);
  std::cout << render_report(report);
  return kExitOk;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline int cmd_explore(const RunConfig& config, const detail::ResumeState& resume = {}) {
  return detail::run_phases(config, detail::Phases::ExploreOnly, resume);
}

inline int cmd_infer(const RunConfig& config, const detail::ResumeState& resume = {}) {
  return detail::run_phases(config, detail::Phases::InferOnly, resume);
}

// Full pipeline: explore + infer each round.
inline int cmd_run(const RunConfig& config, const detail::ResumeState& resume = {}) {
  return detail::run_phases(config, detail::Phases::Both, resume);
}

inline int cmd_eval(const std::string& results_path, const std::string& out_dir) {
  const auto results = load_results(results_path);
  std::string world_id = "unknown";
  MetricsReport report = build_report(results, world_id, "eval");
  std::filesystem::create_directories(out_dir);
  detail::write_report_files(report, out_dir);
  std::cout << render_report(report);
  return kExitOk;
}

inline int cmd_inspect_buffer(const std::string& path, bool graphviz, std::ostream& os) {
  BufferGraph buf = BufferGraph::load(path);
  if (graphviz) {
    os << "digraph buffer {\n";
    for (const auto& [id, node] : buf.nodes()) {
      os << "  \"" << id.substr(0, 12) << "\" [label=\"" << node.obs.locator << "\"];\n";
    }
    for (const auto& [src, edges] : buf.edges()) {
      for (const auto& e : edges) {
        os << "  \"" << src.substr(0, 12) << "\" -> \"" << e.dst.substr(0, 12) << "\" [label=\""
           << to_string(e.action.kind) << " " << e.action.target << "\"];\n";
      }
    }
    os << "}\n";
    return kExitOk;
  }
  os << "buffer " << path << ": " << buf.node_count() << " nodes, " << buf.edge_count()
     << " edges\n";
  // Depth order, then id, for a stable listing.
  std::vector<const BufferNode*> nodes;
  for (const auto& [id, node] : buf.nodes()) nodes.push_back(&node);
  std::stable_sort(nodes.begin(), nodes.end(), [](const BufferNode* a, const BufferNode* b) {
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->obs.obs_id < b->obs.obs_id;
  });
  for (const BufferNode* n : nodes) {
    os << "  [" << n->depth << "] " << n->obs.obs_id.substr(0, 12) << " " << n->obs.locator
       << " visits=" << n->visit_count << "\n";
  }
  for (const auto& [src, edges] : buf.edges()) {
    for (const auto& e : edges) {
      os << "  " << src.substr(0, 12) << " -[" << e.action.describe() << "]-> "
         << e.dst.substr(0, 12) << "\n";
    }
  }
  return kExitOk;
}

inline int cmd_inspect_memory(const std::string& path, std::ostream& os) {
  MemoryStore mem = MemoryStore::load(path);
  os << "memory " << path << ": " << mem.size() << " entries (dim "
     << mem.embedder().dim << ", " << to_string(mem.embedder().method) << ")\n";
  for (const auto& e : mem.entries()) {
    os << "  [" << e.query.id << "] v" << e.version << " " << to_string(e.value.label_at_store)
       << " steps=" << e.value.trajectory.horizon() << " site=" << e.query.site << "\n"
       << "    " << e.query.text << "\n";
  }
  return kExitOk;
}

inline int cmd_compare(const std::string& baseline_report_path,
                       const std::string& candidate_report_path, std::ostream& os) {
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open report: " + path);
    return report_from_json(nlohmann::json::parse(in));
  };
  const ComparisonReport delta = compare_runs(load(baseline_report_path),
                                              load(candidate_report_path));
  os << render_comparison(delta);
  return kExitOk;
}

}  // namespace retrace
