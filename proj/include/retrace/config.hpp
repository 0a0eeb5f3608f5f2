#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

#include "retrace/buffer.hpp"
#include "retrace/errors.hpp"
#include "retrace/hash.hpp"
#include "retrace/search.hpp"

namespace retrace {

// Every knob the experiment surface exposes lives here so ablations are
// config diffs, not code changes.
struct RunConfig {
  std::string world_path;
  std::string out_dir = "out";

  // Agent variant: "full" (buffer + memory + reflection) or "baseline"
  // (memoryless base policy).
  std::string agent = "full";
  std::string policy = "scripted";  // scripted | oracle

  // Search
  FMode f_mode = FMode::Standard;
  double heuristic_weight = 1.0;
  int max_expansions = 500;
  int candidate_cap = 20;

  // Buffer
  std::size_t capacity = 10000;
  EvictionPolicy eviction = EvictionPolicy::LeastRecentlyVisited;

  // Memory
  double dedup_threshold = 0.95;
  double min_similarity = 0.30;
  std::size_t k = 1;
  int embed_dim = 256;

  // Episodes
  std::size_t horizon_cap = 30;
  std::size_t explore_cap = 5;
  int max_oracle_calls = 2000;

  // Oracle: "scripted" with a rules path, or "remote" with an endpoint.
  std::string oracle_mode = "scripted";
  std::string oracle_rules;     // scripted rules file
  std::string oracle_endpoint;  // remote endpoint URL

  std::uint64_t seed = 1;
  int rounds = 1;
  int parallelism = 1;
  bool trust_ground_truth = false;

  // Ablation presets (see --ablate): reflection | navigation | failed-trajectories
  bool ablate_reflection = false;
  bool ablate_navigation = false;
  bool validated_only = false;

  nlohmann::json to_json() const {
    return {{"world", world_path},
            {"out_dir", out_dir},
            {"agent", agent},
            {"policy", policy},
            {"f_mode", to_string(f_mode)},
            {"heuristic_weight", heuristic_weight},
            {"max_expansions", max_expansions},
            {"candidate_cap", candidate_cap},
            {"capacity", capacity},
            {"eviction", to_string(eviction)},
            {"dedup_threshold", dedup_threshold},
            {"min_similarity", min_similarity},
            {"k", k},
            {"embed_dim", embed_dim},
            {"horizon_cap", horizon_cap},
            {"explore_cap", explore_cap},
            {"max_oracle_calls", max_oracle_calls},
            {"oracle", {{"mode", oracle_mode}, {"rules", oracle_rules}, {"endpoint", oracle_endpoint}}},
            {"seed", seed},
            {"rounds", rounds},
            {"parallelism", parallelism},
            {"trust_ground_truth", trust_ground_truth},
            {"ablate_reflection", ablate_reflection},
            {"ablate_navigation", ablate_navigation},
            {"validated_only", validated_only}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.world_path = j.at("world").get<std::string>();
    c.out_dir = j.value("out_dir", c.out_dir);
    c.agent = j.value("agent", c.agent);
    c.policy = j.value("policy", c.policy);
    if (j.contains("f_mode")) c.f_mode = f_mode_from_string(j["f_mode"].get<std::string>());
    c.heuristic_weight = j.value("heuristic_weight", c.heuristic_weight);
    c.max_expansions = j.value("max_expansions", c.max_expansions);
    c.candidate_cap = j.value("candidate_cap", c.candidate_cap);
    c.capacity = j.value("capacity", c.capacity);
    if (j.contains("eviction")) {
      c.eviction = eviction_policy_from_string(j["eviction"].get<std::string>());
    }
    c.dedup_threshold = j.value("dedup_threshold", c.dedup_threshold);
    c.min_similarity = j.value("min_similarity", c.min_similarity);
    c.k = j.value("k", c.k);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.horizon_cap = j.value("horizon_cap", c.horizon_cap);
    c.explore_cap = j.value("explore_cap", c.explore_cap);
    c.max_oracle_calls = j.value("max_oracle_calls", c.max_oracle_calls);
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      c.oracle_mode = o.value("mode", c.oracle_mode);
      c.oracle_rules = o.value("rules", c.oracle_rules);
      c.oracle_endpoint = o.value("endpoint", c.oracle_endpoint);
    }
    c.seed = j.value("seed", c.seed);
    c.rounds = j.value("rounds", c.rounds);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.trust_ground_truth = j.value("trust_ground_truth", c.trust_ground_truth);
    c.ablate_reflection = j.value("ablate_reflection", c.ablate_reflection);
    c.ablate_navigation = j.value("ablate_navigation", c.ablate_navigation);
    c.validated_only = j.value("validated_only", c.validated_only);
    return c;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config: " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("config not valid JSON: ") + e.what());
    }
    return from_json(j);
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw SchemaError("config: " + what); };
    if (world_path.empty()) fail("world path required");
    if (agent != "full" && agent != "baseline") fail("agent must be full or baseline");
    if (policy != "scripted" && policy != "oracle") fail("policy must be scripted or oracle");
    if (heuristic_weight < 0.0 || heuristic_weight > 100.0) fail("heuristic_weight out of range");
    if (max_expansions < 1) fail("max_expansions must be >= 1");
    if (candidate_cap < 1) fail("candidate_cap must be >= 1");
    if (capacity < 1) fail("capacity must be >= 1");
    if (dedup_threshold < 0.0 || dedup_threshold > 1.0) fail("dedup_threshold out of range");
    if (min_similarity < -1.0 || min_similarity > 1.0) fail("min_similarity out of range");
    if (k < 1) fail("k must be >= 1");
    if (embed_dim < 1) fail("embed_dim must be >= 1");
    if (horizon_cap < 1) fail("horizon_cap must be >= 1");
    if (explore_cap < 1) fail("explore_cap must be >= 1");
    if (max_oracle_calls < 1) fail("max_oracle_calls must be >= 1");
    if (rounds < 1) fail("rounds must be >= 1");
    if (parallelism < 1) fail("parallelism must be >= 1");
    if (oracle_mode == "scripted") {
      if (oracle_rules.empty()) fail("scripted oracle needs a rules path");
      if (!std::ifstream(oracle_rules)) fail("oracle rules file not found: " + oracle_rules);
    } else if (oracle_mode == "remote") {
      if (oracle_endpoint.empty()) fail("remote oracle needs an endpoint");
    } else {
      fail("oracle mode must be scripted or remote");
    }
  }

  // Stable digest of the canonical config dump; goes into the run manifest.
  // The output directory is where artifacts land, not part of the experiment,
  // so it is excluded: equal-seed runs to different directories hash equal.
  std::string config_hash() const {
    nlohmann::json j = to_json();
    j.erase("out_dir");
    return sha256_hex(j.dump());
  }
};

}  // namespace retrace
