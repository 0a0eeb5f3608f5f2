#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "retrace/buffer.hpp"
#include "retrace/core.hpp"
#include "retrace/errors.hpp"
#include "retrace/oracle.hpp"

namespace retrace {

// f-rule selection. Standard sums the hop count and the weighted heuristic;
// cumulative adds each enqueued node's heuristic onto its parent's f.
enum class FMode { Standard, Cumulative };

inline const char* to_string(FMode m) { return m == FMode::Standard ? "standard" : "cumulative"; }

inline FMode f_mode_from_string(std::string_view s) {
  if (s == "standard") return FMode::Standard;
  if (s == "cumulative") return FMode::Cumulative;
  throw SchemaError("unknown f mode: " + std::string(s));
}

struct SearchLimits {
  int max_expansions = 500;
  int candidate_cap = 20;
  FMode f_mode = FMode::Standard;
  double heuristic_weight = 1.0;
};

struct PathStep {
  Action action;
  ObsId dst;  // node the action arrives at

  bool operator==(const PathStep&) const = default;
};

struct CandidatePath {
  ObsId terminal;
  std::vector<PathStep> path;  // root -> terminal
  double score = 0.0;          // f at the terminal
};

struct ExpansionRecord {
  ObsId id;
  double f = 0.0;
  int hops = 0;
  double h = 0.0;
};

struct ParentLink {
  ObsId parent;
  Action action;
};

struct SearchResult {
  std::vector<CandidatePath> candidates;
  std::vector<ExpansionRecord> expansions;           // dequeue order
  std::map<ObsId, std::optional<ParentLink>> parents;  // per-search parent pointers
  ObsId root;
  int oracle_calls = 0;
  bool truncated = false;  // hit max_expansions before exhausting the frontier
};

namespace detail {

inline std::string lex_key(const Action& a) { return a.sort_key() + '\x1e'; }

struct QueueEntry {
  double f = 0.0;
  int hops = 0;
  std::string path_key;  // concatenated action sort keys, for deterministic ties
  ObsId id;
  double h = 0.0;

  // Min-priority: f, then hop count, then lexicographically-least action
  // sequence, then obs id.
  bool operator>(const QueueEntry& o) const {
    if (f != o.f) return f > o.f;
    if (hops != o.hops) return hops > o.hops;
    if (path_key != o.path_key) return path_key > o.path_key;
    return id > o.id;
  }
};

inline double ask_heuristic(Oracle& oracle, const Query& q, const std::string& page_text,
                            int& calls) {
  OracleRequest req;
  req.role = OracleRole::Heuristic;
  req.query = q;
  req.context.page_text = page_text;
  ++calls;
  const double promise = oracle.judge(req).promise;
  // The oracle scores promise (higher = better); the queue wants a cost.
  return 1.0 - promise;
}

inline bool ask_relevance(Oracle& oracle, const Query& q, const std::string& page_text,
                          int& calls) {
  OracleRequest req;
  req.role = OracleRole::Relevance;
  req.query = q;
  req.context.page_text = page_text;
  ++calls;
  return oracle.judge(req).relevant;
}

}  // namespace detail

// Root-to-terminal path recovered from a search's parent pointers.
inline CandidatePath backtrack(const SearchResult& result, const ObsId& terminal) {
  if (!result.parents.count(terminal)) throw NotVisited(terminal);
  CandidatePath out;
  out.terminal = terminal;
  ObsId cur = terminal;
  while (true) {
    const auto& link = result.parents.at(cur);
    if (!link) break;  // root
    out.path.push_back({link->action, cur});
    cur = link->parent;
    if (out.path.size() > result.parents.size()) throw NotVisited(terminal);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

// Best-first search over a buffer snapshot. Nodes come off a priority queue
// in ascending f order; every dequeued node the oracle deems relevant joins
// the candidate queue, and expansion continues until the frontier is
// exhausted or max_expansions is hit. Parent pointers are per-search; the
// buffer is never mutated.
inline SearchResult astar_search(const BufferGraph& buf, const Query& q, Oracle& oracle,
                                 const SearchLimits& limits = {}) {
  SearchResult result;
  if (buf.empty()) return result;
  const auto root = buf.root_of(q.site);
  if (!root) throw NoRoot(q.site);
  result.root = *root;

  std::priority_queue<detail::QueueEntry, std::vector<detail::QueueEntry>, std::greater<>> open;
  std::set<ObsId> visited;

  const double h0 =
      detail::ask_heuristic(oracle, q, buf.reconstruct_page(*root), result.oracle_calls);
  detail::QueueEntry root_entry;
  root_entry.id = *root;
  root_entry.h = h0;
  root_entry.f = limits.f_mode == FMode::Cumulative ? h0 : h0 * limits.heuristic_weight;
  visited.insert(*root);
  result.parents[*root] = std::nullopt;
  open.push(root_entry);

  int expansions = 0;
  while (!open.empty()) {
    if (expansions >= limits.max_expansions) {
      result.truncated = true;
      break;
    }
    const detail::QueueEntry cur = open.top();
    open.pop();
    ++expansions;
    result.expansions.push_back({cur.id, cur.f, cur.hops, cur.h});

    if (detail::ask_relevance(oracle, q, buf.reconstruct_page(cur.id), result.oracle_calls) &&
        static_cast<int>(result.candidates.size()) < limits.candidate_cap) {
      CandidatePath cand = backtrack(result, cur.id);
      cand.score = cur.f;
      result.candidates.push_back(std::move(cand));
    }

    for (const auto& [action, dst] : buf.neighbors(cur.id)) {
      if (visited.count(dst)) continue;
      const double h =
          detail::ask_heuristic(oracle, q, buf.reconstruct_page(dst), result.oracle_calls);
      detail::QueueEntry next;
      next.id = dst;
      next.h = h;
      next.hops = cur.hops + 1;
      next.f = limits.f_mode == FMode::Cumulative ? cur.f + h
                                                  : next.hops + h * limits.heuristic_weight;
      next.path_key = cur.path_key + detail::lex_key(action);
      visited.insert(dst);
      result.parents[dst] = ParentLink{cur.id, action};
      open.push(next);
    }
  }
  return result;
}

namespace detail {

inline std::string render_path_actions(const CandidatePath& c) {
  std::ostringstream os;
  for (std::size_t i = 0; i < c.path.size(); ++i) {
    if (i) os << "; ";
    os << c.path[i].action.describe();
  }
  return os.str();
}

inline std::string path_lex_key(const CandidatePath& c) {
  std::string key;
  for (const auto& s : c.path) key += lex_key(s.action);
  return key;
}

}  // namespace detail

// Oracle-ranked selection of the optimal path. Ties (and oracle abstention)
// break deterministically: shorter path, then lexicographically-least action
// sequence, then terminal id.
inline std::optional<CandidatePath> rank_and_select(const std::vector<CandidatePath>& cands,
                                                    const Query& q, Oracle& oracle,
                                                    const BufferGraph* buf = nullptr) {
  if (cands.empty()) return std::nullopt;
  if (cands.size() == 1) return cands.front();

  OracleRequest req;
  req.role = OracleRole::RankPaths;
  req.query = q;
  std::vector<CandidateRender> renders;
  renders.reserve(cands.size());
  for (const auto& c : cands) {
    std::string terminal_page;
    if (buf && buf->contains(c.terminal)) terminal_page = buf->reconstruct_page(c.terminal);
    renders.push_back({detail::render_path_actions(c), std::move(terminal_page), c.path.size()});
  }
  req.context.candidates = std::move(renders);
  const OracleVerdict verdict = oracle.judge(req);

  if (!verdict.order.empty()) return cands[verdict.order.front()];

  // Higher score wins; abstention scores everything equal. Ties break on the
  // shorter path, then the lexicographically-least action sequence.
  auto better = [&](std::size_t a, std::size_t b) {
    if (!verdict.scores.empty() && verdict.scores[a] != verdict.scores[b]) {
      return verdict.scores[a] > verdict.scores[b];
    }
    if (cands[a].path.size() != cands[b].path.size()) {
      return cands[a].path.size() < cands[b].path.size();
    }
    const auto ka = detail::path_lex_key(cands[a]), kb = detail::path_lex_key(cands[b]);
    if (ka != kb) return ka < kb;
    return cands[a].terminal < cands[b].terminal;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (better(i, best)) best = i;
  }
  return cands[best];
}

// Search-based correction for a navigation failure: find the optimal buffer
// path for the query and return a trajectory whose navigation prefix is that
// path. Nothing relevant in the buffer -> nullopt.
inline std::optional<Trajectory> repair_navigation(const BufferGraph& buf,
                                                   const Trajectory& failed, const Query& q,
                                                   Oracle& oracle,
                                                   const SearchLimits& limits = {}) {
  if (buf.empty()) return std::nullopt;
  SearchResult sr = astar_search(buf, q, oracle, limits);
  auto best = rank_and_select(sr.candidates, q, oracle, &buf);
  if (!best) return std::nullopt;

  Trajectory corrected;
  corrected.query_id = failed.query_id.empty() ? q.id : failed.query_id;
  corrected.initial = buf.node(sr.root).obs;
  for (const auto& step : best->path) {
    corrected.steps.push_back({step.action, buf.node(step.dst).obs});
  }
  return corrected;
}

}  // namespace retrace
