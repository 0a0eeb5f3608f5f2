#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "retrace/core.hpp"
#include "retrace/errors.hpp"
#include "retrace/record_io.hpp"

namespace retrace {

enum class EvictionPolicy { LeastRecentlyVisited, LeastFrequentlyVisited };

inline const char* to_string(EvictionPolicy p) {
  return p == EvictionPolicy::LeastRecentlyVisited ? "lru" : "lfu";
}

inline EvictionPolicy eviction_policy_from_string(std::string_view s) {
  if (s == "lru") return EvictionPolicy::LeastRecentlyVisited;
  if (s == "lfu") return EvictionPolicy::LeastFrequentlyVisited;
  throw SchemaError("unknown eviction policy: " + std::string(s));
}

struct BufferNode {
  Observation obs;  // diff form; full_state retained only for roots
  std::optional<ObsId> parent_hint;
  std::uint64_t last_visit = 0;
  std::uint64_t visit_count = 0;
  int depth = 0;
};

struct BufferEdge {
  Action action;
  ObsId dst;

  bool operator<(const BufferEdge& other) const {
    const auto a = action.sort_key(), b = other.action.sort_key();
    if (a != b) return a < b;
    return dst < other.dst;
  }
  bool operator==(const BufferEdge&) const = default;
};

// Bounded directed graph of deduplicated observations with action-labeled
// edges — the union of every ingested episode's observation sequence. One
// root per site. Nodes referenced by reflective memory are pinned and never
// evicted; the eviction policy only removes diff-chain leaves so stored
// chains stay reconstructible.
class BufferGraph {
 public:
  explicit BufferGraph(std::size_t capacity = 10000,
                       EvictionPolicy policy = EvictionPolicy::LeastRecentlyVisited)
      : capacity_(capacity), policy_(policy) {}

  std::size_t capacity() const { return capacity_; }
  EvictionPolicy policy() const { return policy_; }
  std::size_t node_count() const { return nodes_.size(); }
  int eviction_warnings() const { return eviction_warnings_; }
  bool empty() const { return nodes_.empty(); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& [src, edges] : adj_) n += edges.size();
    return n;
  }

  const std::map<ObsId, BufferNode>& nodes() const { return nodes_; }
  const std::map<ObsId, std::set<BufferEdge>>& edges() const { return adj_; }
  const std::map<std::string, ObsId>& roots() const { return roots_; }
  const std::set<ObsId>& pinned() const { return pinned_; }

  bool contains(const ObsId& id) const { return nodes_.count(id) > 0; }

  std::optional<ObsId> root_of(const std::string& site) const {
    auto it = roots_.find(site);
    if (it == roots_.end()) return std::nullopt;
    return it->second;
  }

  const BufferNode& node(const ObsId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode(id);
    return it->second;
  }

  void pin(const ObsId& id) {
    if (nodes_.count(id)) pinned_.insert(id);
  }

  void pin_trajectory(const Trajectory& t) {
    pin(t.initial.obs_id);
    for (const auto& s : t.steps) pin(s.obs.obs_id);
  }

  // Folds one episode into the graph: dedups nodes, unions edges, bumps visit
  // stats, relaxes depths, and enforces capacity. Total for any trajectory
  // whose first observation is a site root (new with full state, or known).
  void ingest_episode(const Trajectory& traj, const std::string& site) {
    const ObsId& first = traj.initial.obs_id;
    if (!nodes_.count(first)) {
      if (!traj.initial.is_root()) {
        throw std::invalid_argument("trajectory starts at unknown node without full state");
      }
      auto existing_root = roots_.find(site);
      if (existing_root != roots_.end() && existing_root->second != first) {
        throw std::invalid_argument("site " + site + " already has a different root");
      }
      BufferNode n;
      n.obs = traj.initial;
      n.depth = 0;
      nodes_.emplace(first, std::move(n));
      roots_[site] = first;
    } else if (!roots_.count(site)) {
      roots_[site] = first;
    }
    touch(first);

    ObsId prev = first;
    for (const auto& step : traj.steps) {
      const ObsId& cur = step.obs.obs_id;
      if (!nodes_.count(cur)) {
        BufferNode n;
        n.obs = step.obs;
        if (!n.obs.is_root()) n.obs.full_state.reset();  // diffs only off the root
        n.parent_hint = prev;
        n.depth = nodes_.at(prev).depth + 1;
        nodes_.emplace(cur, std::move(n));
        ++diff_children_[prev];
      } else {
        relax_depth(cur, nodes_.at(prev).depth + 1);
      }
      touch(cur);
      if (adj_[prev].insert({step.action, cur}).second) in_edges_[cur].insert(prev);
      prev = cur;
    }
    evict();
  }

  // Outgoing edges in a deterministic order (action kind, target, payload,
  // then destination).
  std::vector<std::pair<Action, ObsId>> neighbors(const ObsId& id) const {
    if (!nodes_.count(id)) throw UnknownNode(id);
    std::vector<std::pair<Action, ObsId>> out;
    auto it = adj_.find(id);
    if (it == adj_.end()) return out;
    out.reserve(it->second.size());
    for (const auto& e : it->second) out.emplace_back(e.action, e.dst);
    return out;
  }

  // Applies diffs along the stored parent_hint chain from the root's cached
  // full state. The result hashes back to `id` for every live node.
  std::string reconstruct_page(const ObsId& id) const {
    const BufferNode* n = &node(id);
    std::vector<const BufferNode*> chain{n};
    while (!n->obs.is_root()) {
      if (!n->parent_hint) throw BrokenChain(id + ": node without parent hint");
      auto it = nodes_.find(*n->parent_hint);
      if (it == nodes_.end()) throw BrokenChain(id + ": ancestor " + *n->parent_hint + " missing");
      n = &it->second;
      chain.push_back(n);
      if (chain.size() > nodes_.size() + 1) throw BrokenChain(id + ": cyclic parent chain");
    }
    std::vector<std::string> lines = state_lines(*n->obs.full_state);
    for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) {
      lines = apply_diff(lines, (*it)->obs.diff);
    }
    return join_lines(lines);
  }

  // Explicit eviction pass; ingest_episode calls this automatically. Removes
  // the lowest-priority evictable nodes (unpinned, non-root, diff-chain leaf)
  // until the capacity bound holds. When everything left is protected the
  // bound may be exceeded and a warning is recorded instead.
  void evict() {
    while (nodes_.size() > capacity_) {
      const ObsId* victim = nullptr;
      for (const auto& [id, n] : nodes_) {
        if (pinned_.count(id) || n.obs.is_root()) continue;
        auto dc = diff_children_.find(id);
        if (dc != diff_children_.end() && dc->second > 0) continue;
        if (!victim) {
          victim = &id;
        } else {
          const BufferNode& best = nodes_.at(*victim);
          bool worse;
          if (policy_ == EvictionPolicy::LeastRecentlyVisited) {
            worse = n.last_visit < best.last_visit;
          } else {
            worse = n.visit_count < best.visit_count ||
                    (n.visit_count == best.visit_count && n.last_visit < best.last_visit);
          }
          if (worse) victim = &id;
        }
      }
      if (!victim) {
        ++eviction_warnings_;
        return;
      }
      erase_node(*victim);
    }
  }

  void save(const std::string& path) const {
    RecordWriter w(path, "buffer", kSchema);
    nlohmann::json meta = {{"capacity", capacity_},
                           {"policy", to_string(policy_)},
                           {"clock", clock_},
                           {"warnings", eviction_warnings_},
                           {"roots", roots_},
                           {"pinned", std::vector<ObsId>(pinned_.begin(), pinned_.end())}};
    w.write({{"meta", meta}});
    for (const auto& [id, n] : nodes_) {
      nlohmann::json rec = {{"node", to_json(n.obs)},
                            {"last_visit", n.last_visit},
                            {"visit_count", n.visit_count},
                            {"depth", n.depth}};
      if (n.parent_hint) rec["parent"] = *n.parent_hint;
      w.write(rec);
    }
    for (const auto& [src, edges] : adj_) {
      for (const auto& e : edges) {
        w.write({{"edge", {{"src", src}, {"action", to_json(e.action)}, {"dst", e.dst}}}});
      }
    }
  }

  static BufferGraph load(const std::string& path) {
    RecordReader r(path, "buffer", kSchema);
    nlohmann::json rec;
    if (!r.next(rec) || !rec.contains("meta")) throw SchemaError("buffer snapshot missing meta");
    const auto& meta = rec["meta"];
    BufferGraph g(meta.at("capacity").get<std::size_t>(),
                  eviction_policy_from_string(meta.at("policy").get<std::string>()));
    g.clock_ = meta.at("clock").get<std::uint64_t>();
    g.eviction_warnings_ = meta.at("warnings").get<int>();
    g.roots_ = meta.at("roots").get<std::map<std::string, ObsId>>();
    for (const auto& id : meta.at("pinned")) g.pinned_.insert(id.get<ObsId>());
    while (r.next(rec)) {
      if (rec.contains("node")) {
        BufferNode n;
        n.obs = observation_from_json(rec["node"]);
        n.last_visit = rec.at("last_visit").get<std::uint64_t>();
        n.visit_count = rec.at("visit_count").get<std::uint64_t>();
        n.depth = rec.at("depth").get<int>();
        if (rec.contains("parent")) {
          n.parent_hint = rec["parent"].get<ObsId>();
          ++g.diff_children_[*n.parent_hint];
        }
        g.nodes_.emplace(n.obs.obs_id, std::move(n));
      } else if (rec.contains("edge")) {
        const auto& e = rec["edge"];
        ObsId src = e.at("src").get<ObsId>();
        BufferEdge edge{action_from_json(e.at("action")), e.at("dst").get<ObsId>()};
        g.in_edges_[edge.dst].insert(src);
        g.adj_[src].insert(std::move(edge));
      } else {
        throw SchemaError("unrecognized buffer record");
      }
    }
    for (const auto& [src, edges] : g.adj_) {
      if (!g.nodes_.count(src)) throw SchemaError("edge from unknown node " + src);
      for (const auto& e : edges) {
        if (!g.nodes_.count(e.dst)) throw SchemaError("edge to unknown node " + e.dst);
      }
    }
    return g;
  }

  // Snapshot equality: same node set, edge set and depths.
  bool structurally_equal(const BufferGraph& other) const {
    if (nodes_.size() != other.nodes_.size() || adj_ != other.adj_) return false;
    for (const auto& [id, n] : nodes_) {
      auto it = other.nodes_.find(id);
      if (it == other.nodes_.end() || it->second.depth != n.depth || !(it->second.obs == n.obs)) {
        return false;
      }
    }
    return roots_ == other.roots_;
  }

 private:
  static constexpr int kSchema = 1;

  void touch(const ObsId& id) {
    BufferNode& n = nodes_.at(id);
    n.last_visit = ++clock_;
    ++n.visit_count;
  }

  // Shorter chains discovered later update depth (and propagate), but never
  // the diff chain, so reconstruction stays stable.
  void relax_depth(const ObsId& id, int candidate) {
    if (candidate >= nodes_.at(id).depth) return;
    nodes_.at(id).depth = candidate;
    std::deque<ObsId> frontier{id};
    while (!frontier.empty()) {
      ObsId cur = frontier.front();
      frontier.pop_front();
      int base = nodes_.at(cur).depth;
      auto it = adj_.find(cur);
      if (it == adj_.end()) continue;
      for (const auto& e : it->second) {
        auto n = nodes_.find(e.dst);
        if (n != nodes_.end() && n->second.depth > base + 1) {
          n->second.depth = base + 1;
          frontier.push_back(e.dst);
        }
      }
    }
  }

  void erase_node(const ObsId& id) {
    const BufferNode& n = nodes_.at(id);
    if (n.parent_hint) {
      auto dc = diff_children_.find(*n.parent_hint);
      if (dc != diff_children_.end() && --dc->second == 0) diff_children_.erase(dc);
    }
    auto in = in_edges_.find(id);
    if (in != in_edges_.end()) {
      for (const auto& src : in->second) {
        auto a = adj_.find(src);
        if (a == adj_.end()) continue;
        for (auto it = a->second.begin(); it != a->second.end();) {
          it = it->dst == id ? a->second.erase(it) : std::next(it);
        }
        if (a->second.empty()) adj_.erase(a);
      }
      in_edges_.erase(in);
    }
    auto out = adj_.find(id);
    if (out != adj_.end()) {
      for (const auto& e : out->second) {
        auto rev = in_edges_.find(e.dst);
        if (rev != in_edges_.end()) {
          rev->second.erase(id);
          if (rev->second.empty()) in_edges_.erase(rev);
        }
      }
      adj_.erase(out);
    }
    pinned_.erase(id);
    nodes_.erase(id);
  }

  std::size_t capacity_;
  EvictionPolicy policy_;
  std::uint64_t clock_ = 0;
  int eviction_warnings_ = 0;
  std::map<ObsId, BufferNode> nodes_;
  std::map<ObsId, std::set<BufferEdge>> adj_;
  std::map<ObsId, std::set<ObsId>> in_edges_;
  std::map<ObsId, int> diff_children_;  // live nodes whose parent_hint == key
  std::map<std::string, ObsId> roots_;  // site -> root obs
  std::set<ObsId> pinned_;
};

}  // namespace retrace
