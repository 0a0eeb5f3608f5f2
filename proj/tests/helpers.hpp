#pragma once

// Shared test fixtures: synthetic observation chains, seeded random buffer
// graphs with an independent adjacency view, and the reference
// implementations the oracle-style tests compare against.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "retrace/buffer.hpp"
#include "retrace/core.hpp"
#include "retrace/env.hpp"
#include "retrace/oracle.hpp"

namespace testutil {

using namespace retrace;

inline std::uint64_t splitmix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::string pad4(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

// Raw page text for synthetic node i; the delimited token makes substring
// matchers collision-free.
inline std::string node_state(int i) {
  return "@page n" + pad4(i) + "\nel marker|text|node-token-" + pad4(i) + ";";
}

inline Observation node_root(int i) { return make_root_observation("n" + pad4(i), node_state(i)); }

inline Observation node_obs(int i, int prev) {
  Observation o;
  o.locator = "n" + pad4(i);
  const auto prev_lines = state_lines(node_state(prev));
  const auto cur_lines = state_lines(node_state(i));
  o.diff = diff_states(prev_lines, cur_lines);
  o.obs_id = observation_hash(join_lines(cur_lines));
  return o;
}

inline Action edge_action(int u, int v) { return Action::click("e" + pad4(u) + "-" + pad4(v)); }

// A seeded random connected digraph ingested into a buffer, with the edge
// list kept separately so tests can run independent graph algorithms on it.
struct GraphFixture {
  BufferGraph buf{100000};
  std::vector<std::pair<int, int>> edges;   // independent adjacency
  std::vector<int> tree_parent;             // tree_parent[0] = -1
  std::vector<ObsId> ids;                   // node index -> obs id
  std::string site = "test";

  std::vector<int> tree_path(int node) const {  // root..node
    std::vector<int> path;
    for (int cur = node; cur != -1; cur = tree_parent[static_cast<std::size_t>(cur)]) {
      path.push_back(cur);
    }
    return {path.rbegin(), path.rend()};
  }
};

inline GraphFixture random_graph(std::uint64_t seed, int n, int extra_edges) {
  GraphFixture g;
  g.tree_parent.assign(static_cast<std::size_t>(n), -1);
  g.ids.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.ids[static_cast<std::size_t>(i)] = node_obs(i, 0).obs_id;
  g.ids[0] = node_root(0).obs_id;

  std::uint64_t state = seed;
  for (int i = 1; i < n; ++i) {
    const int p = static_cast<int>(splitmix(state) % static_cast<std::uint64_t>(i));
    g.tree_parent[static_cast<std::size_t>(i)] = p;
    g.edges.emplace_back(p, i);
  }
  std::set<std::pair<int, int>> seen(g.edges.begin(), g.edges.end());
  for (int k = 0; k < extra_edges && n > 2; ++k) {
    const int u = static_cast<int>(splitmix(state) % static_cast<std::uint64_t>(n));
    const int v = static_cast<int>(splitmix(state) % static_cast<std::uint64_t>(n));
    if (u == v || seen.count({u, v})) continue;
    seen.insert({u, v});
    g.edges.emplace_back(u, v);
  }

  // Ingest one episode per edge: the tree path to the source, then the edge.
  for (const auto& [u, v] : g.edges) {
    Trajectory t;
    t.query_id = "gen";
    t.initial = node_root(0);
    int prev = 0;
    for (int node : g.tree_path(u)) {
      if (node == 0) continue;
      t.steps.push_back({edge_action(prev, node), node_obs(node, prev)});
      prev = node;
    }
    t.steps.push_back({edge_action(u, v), node_obs(v, u)});
    g.buf.ingest_episode(t, g.site);
  }
  if (n == 1 || g.edges.empty()) {
    Trajectory t;
    t.query_id = "gen";
    t.initial = node_root(0);
    t.steps.push_back({Action::stop("x"), node_root(0)});
    g.buf.ingest_episode(t, g.site);
  }
  return g;
}

// Independent shortest-path oracle over the fixture's own edge list.
inline std::vector<int> bfs_distances(const GraphFixture& g, int n) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [u, v] : g.edges) adj[static_cast<std::size_t>(u)].push_back(v);
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  dist[0] = 0;
  std::vector<int> frontier{0};
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const int u = frontier[i];
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] == -1) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

// Scripted oracle where every node's relevance/heuristic is table-driven by
// its delimited token.
inline ScriptedOracle scripted_for_nodes(const std::set<int>& relevant,
                                         const std::map<int, double>& promise,
                                         double default_promise) {
  ScriptedOracle oracle;
  for (int i : relevant) {
    ScriptedRule rule;
    rule.role = OracleRole::Relevance;
    rule.context_contains = {"node-token-" + pad4(i) + ";"};
    rule.verdict = {{"value", true}};
    oracle.add_rule(std::move(rule));
  }
  for (const auto& [i, p] : promise) {
    ScriptedRule rule;
    rule.role = OracleRole::Heuristic;
    rule.context_contains = {"node-token-" + pad4(i) + ";"};
    rule.verdict = {{"promise", p}};
    oracle.add_rule(std::move(rule));
  }
  oracle.set_default(OracleRole::Heuristic, {{"promise", default_promise}});
  return oracle;
}

// Reference eviction simulation, reimplemented from the documented policy:
// evict the least-recently-visited unpinned non-root diff-chain leaf until
// the capacity bound holds. Consumes the same episode stream the buffer saw.
struct ReferenceLru {
  struct Node {
    std::uint64_t last_visit = 0;
    int parent = -1;  // -1 for root
  };

  explicit ReferenceLru(std::size_t capacity) : capacity_(capacity) {}

  void episode(const std::vector<int>& nodes) {  // nodes[0] is the root
    touch(nodes[0], -1, true);
    for (std::size_t i = 1; i < nodes.size(); ++i) touch(nodes[i], nodes[i - 1], false);
    evict();
  }

  void pin(int id) { pinned_.insert(id); }

  std::set<int> survivors() const {
    std::set<int> out;
    for (const auto& [id, n] : nodes_) out.insert(id);
    return out;
  }

 private:
  void touch(int id, int parent, bool is_root) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      Node n;
      n.parent = is_root ? -1 : parent;
      if (!is_root) ++children_[parent];
      it = nodes_.emplace(id, n).first;
      if (is_root) roots_.insert(id);
    }
    it->second.last_visit = ++clock_;
  }

  void evict() {
    while (nodes_.size() > capacity_) {
      int victim = -1;
      std::uint64_t best = 0;
      for (const auto& [id, n] : nodes_) {
        if (pinned_.count(id) || roots_.count(id)) continue;
        auto c = children_.find(id);
        if (c != children_.end() && c->second > 0) continue;
        if (victim == -1 || n.last_visit < best) {
          victim = id;
          best = n.last_visit;
        }
      }
      if (victim == -1) return;
      const auto& n = nodes_.at(victim);
      if (n.parent != -1 && --children_[n.parent] == 0) children_.erase(n.parent);
      nodes_.erase(victim);
      pinned_.erase(victim);
    }
  }

  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  std::map<int, Node> nodes_;
  std::map<int, int> children_;
  std::set<int> roots_;
  std::set<int> pinned_;
};

// Tiny in-memory world: one site, a hub root with spokes and one deeper
// chain, used by env/runtime tests that don't need the bundled fixtures.
inline World mini_world() {
  World w;
  w.id = "mini";
  SiteGraph site;
  site.site_id = "mini";
  site.root = "home";

  auto page = [](const std::string& locator,
                 std::vector<std::pair<std::string, std::string>> links,
                 std::vector<std::pair<std::string, std::string>> fields) {
    PageSpec p;
    p.locator = locator;
    p.elements.push_back({"title", "heading", locator});
    for (const auto& [text, dest] : links) {
      const std::string id = "lnk_" + text;
      p.elements.push_back({id, "link", text});
      p.affordances.push_back({ActionKind::Click, id, dest, {}});
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      p.elements.push_back(
          {"fld_" + std::to_string(i), "field", fields[i].first + ": " + fields[i].second});
    }
    return p;
  };

  site.pages["home"] = page("home", {{"alpha", "alpha"}, {"beta", "beta"}}, {});
  site.pages["alpha"] = page("alpha", {{"deep", "deep"}, {"start", "home"}}, {});
  site.pages["beta"] = page("beta", {{"start", "home"}}, {{"answer code", "42"}});
  site.pages["deep"] = page("deep", {{"start", "home"}}, {{"target mark", "prize"}});

  for (const auto& [loc, p] : site.pages) {
    w.page_ids["mini"][loc] = observation_hash(normalize_page(render_page(p)));
  }
  w.sites.push_back(std::move(site));

  TaskSpec find_answer;
  find_answer.query = {"q_beta", "read the answer code under beta", "mini"};
  find_answer.key_obs.members = {w.obs_id_of("mini", "beta")};
  find_answer.validator = {ValidatorKind::AnswerEquals, "42"};
  w.tasks.push_back(find_answer);

  TaskSpec find_prize;
  find_prize.query = {"q_deep", "fetch the target mark hidden far away", "mini"};
  find_prize.key_obs.members = {w.obs_id_of("mini", "deep")};
  find_prize.validator = {ValidatorKind::AnswerEquals, "prize"};
  w.tasks.push_back(find_prize);

  return w;
}

inline std::string asset_path(const std::string& rel) {
  return std::string(RETRACE_ASSET_DIR) + "/" + rel;
}

}  // namespace testutil
