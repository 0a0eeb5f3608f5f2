#pragma once

#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "retrace/buffer.hpp"
#include "retrace/core.hpp"
#include "retrace/env.hpp"
#include "retrace/memory.hpp"
#include "retrace/oracle.hpp"
#include "retrace/reflect.hpp"
#include "retrace/search.hpp"

namespace retrace {

// ---------------------------------------------------------------------------
// Demonstrations and policies

struct Demonstration {
  Query query;
  MemoryValue value;
  double similarity = 0.0;
};

// Renders retrieved memory values the way they are prepended to an agent
// context: query, numbered action list, rationale.
inline std::string render_demonstration(const Demonstration& d) {
  std::string out = "task: " + d.query.text + "\n";
  const auto actions = d.value.trajectory.actions();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out += std::to_string(i + 1) + ". " + actions[i].describe() + "\n";
  }
  out += "rationale: " + d.value.rationale + "\n";
  return out;
}

struct HistoryStep {
  Action action;
  std::string locator;
};

struct PolicyContext {
  const Query& query;
  const std::string& page_text;  // raw render, authored element order
  const std::vector<HistoryStep>& history;
  const std::vector<Demonstration>& demos;
};

class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual void begin_episode() {}
  virtual Action decide(const PolicyContext& ctx) = 0;
  virtual int oracle_calls() const { return 0; }
};

using PolicyFactory = std::function<std::unique_ptr<AgentPolicy>()>;

namespace detail {

struct PageElement {
  std::string id, role, text;
};

inline std::vector<PageElement> parse_elements(const std::string& page_text) {
  std::vector<PageElement> out;
  for (const auto& line : split_lines(page_text)) {
    if (line.rfind("el ", 0) != 0) continue;
    const std::string body = line.substr(3);
    const std::size_t p1 = body.find('|');
    if (p1 == std::string::npos) continue;
    const std::size_t p2 = body.find('|', p1 + 1);
    if (p2 == std::string::npos) continue;
    out.push_back({body.substr(0, p1), body.substr(p1 + 1, p2 - p1 - 1), body.substr(p2 + 1)});
  }
  return out;
}

inline bool is_clickable(const PageElement& e) {
  return e.role == "link" || e.role == "button" || e.role == "tab" || e.role == "option";
}

// "label: value" fields carry the extractable data.
inline std::optional<std::pair<std::string, std::string>> field_of(const PageElement& e) {
  if (e.role != "field") return std::nullopt;
  const std::size_t sep = e.text.find(": ");
  if (sep == std::string::npos) return std::nullopt;
  return std::make_pair(e.text.substr(0, sep), e.text.substr(sep + 2));
}

inline std::size_t token_overlap(const std::vector<std::string>& query_tokens,
                                 const std::string& text) {
  static const std::set<std::string> kStop = {"the", "a",  "an", "of", "in", "on",  "for",
                                              "to",  "is", "my", "me", "at", "and", "what"};
  std::set<std::string> words;
  for (auto& t : tokenize(text)) {
    if (!kStop.count(t)) words.insert(std::move(t));
  }
  std::size_t n = 0;
  for (const auto& t : query_tokens) {
    if (!kStop.count(t) && words.count(t)) ++n;
  }
  return n;
}

// Parses "hint:<key>=<value to end of line>" directives out of a rationale.
inline std::optional<std::string> parse_hint(const std::string& rationale, const std::string& key) {
  const std::string needle = "hint:" + key + "=";
  const std::size_t pos = rationale.find(needle);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t end = rationale.find('\n', pos);
  if (end == std::string::npos) end = rationale.size();
  return rationale.substr(pos + needle.size(), end - (pos + needle.size()));
}

}  // namespace detail

// Deterministic scripted agent. Replays a retrieved demonstration when one
// applies, honors hint directives from its rationale, and otherwise falls
// back to keyword-guided navigation with a first-unvisited wander. It is a
// deliberately imperfect base agent: it extracts the first field that shares
// a token with the query, and it wanders blind when no label matches.
class ScriptedPolicy : public AgentPolicy {
 public:
  // A demonstration is replayed structurally only when it is effectively this
  // task's own stored entry; weaker matches stay advisory context.
  static constexpr double kReplaySimilarity = 0.999;

  void begin_episode() override {
    replay_cursor_ = 0;
    replay_abandoned_ = false;
    tried_.clear();
    hint_click_done_ = false;
  }

  Action decide(const PolicyContext& ctx) override {
    const auto elements = detail::parse_elements(ctx.page_text);
    const std::string locator = locator_of(ctx.page_text);
    const bool own_demo = !ctx.demos.empty() &&
                          ctx.demos.front().similarity >= kReplaySimilarity;

    // 1. Demonstration replay.
    if (own_demo && !replay_abandoned_) {
      const auto& steps = ctx.demos.front().value.trajectory.steps;
      if (replay_cursor_ < steps.size()) {
        const Action& a = steps[replay_cursor_].action;
        if (a.kind == ActionKind::Stop || element_present(elements, a.target)) {
          ++replay_cursor_;
          if (a.kind != ActionKind::Stop) tried_.insert({locator, a.target});
          return a;
        }
        replay_abandoned_ = true;
      }
    }

    // 2. Rationale hints, once the demo prefix is exhausted.
    if (own_demo) {
      const std::string& rationale = ctx.demos.front().value.rationale;
      if (auto click = detail::parse_hint(rationale, "click"); click && !hint_click_done_) {
        for (const auto& e : elements) {
          if (detail::is_clickable(e) && e.text == *click && !tried_.count({locator, e.id})) {
            hint_click_done_ = true;
            tried_.insert({locator, e.id});
            return Action::click(e.id);
          }
        }
      }
      if (auto field = detail::parse_hint(rationale, "answer_field")) {
        for (const auto& e : elements) {
          if (auto f = detail::field_of(e); f && f->first == *field) {
            return Action::stop(f->second);
          }
        }
      }
    }

    const auto query_tokens = tokenize(ctx.query.text);

    // 3. Base extraction: first field sharing a token with the query.
    for (const auto& e : elements) {
      if (auto f = detail::field_of(e)) {
        if (detail::token_overlap(query_tokens, f->first) > 0) return Action::stop(f->second);
      }
    }

    // 4. Keyword navigation: best untried label overlap.
    const detail::PageElement* best = nullptr;
    std::size_t best_score = 0;
    for (const auto& e : elements) {
      if (!detail::is_clickable(e) || tried_.count({locator, e.id})) continue;
      const std::size_t score = detail::token_overlap(query_tokens, e.text);
      if (score > best_score) {
        best_score = score;
        best = &e;
      }
    }
    if (best) {
      tried_.insert({locator, best->id});
      return Action::click(best->id);
    }

    // 5. Wander: first untried clickable, else a nav link to escape.
    for (const auto& e : elements) {
      if (detail::is_clickable(e) && !tried_.count({locator, e.id})) {
        tried_.insert({locator, e.id});
        return Action::click(e.id);
      }
    }
    for (const auto& e : elements) {
      if (detail::is_clickable(e) && e.id.rfind("nav_", 0) == 0) return Action::click(e.id);
    }
    return Action::stop("");  // nowhere left to go
  }

 private:
  static std::string locator_of(const std::string& page_text) {
    for (const auto& line : split_lines(page_text)) {
      if (line.rfind("@page ", 0) == 0) return line.substr(6);
    }
    return "";
  }

  static bool element_present(const std::vector<detail::PageElement>& elements,
                              const std::string& id) {
    for (const auto& e : elements) {
      if (e.id == id) return true;
    }
    return false;
  }

  std::size_t replay_cursor_ = 0;
  bool replay_abandoned_ = false;
  bool hint_click_done_ = false;
  std::set<std::pair<std::string, std::string>> tried_;  // (locator, element id)
};

// Oracle-driven agent: the current page's applicable actions are ranked as
// one-step candidate routes through the RankPaths role. Demonstrations are
// rendered into the query context. Each episode gets its own call budget; an
// exhausted budget ends the episode with an empty Stop rather than looping.
class OracleDrivenPolicy : public AgentPolicy {
 public:
  explicit OracleDrivenPolicy(Oracle& oracle, int max_calls_per_episode = 2000)
      : oracle_(oracle), max_calls_(max_calls_per_episode) {}

  void begin_episode() override { budget_.emplace(oracle_, max_calls_); }

  Action decide(const PolicyContext& ctx) override {
    const auto elements = detail::parse_elements(ctx.page_text);
    std::vector<Action> options;
    for (const auto& e : elements) {
      if (detail::is_clickable(e)) options.push_back(Action::click(e.id));
    }
    for (const auto& e : elements) {
      if (auto f = detail::field_of(e)) options.push_back(Action::stop(f->second));
    }
    options.push_back(Action::stop(""));

    OracleRequest req;
    req.role = OracleRole::RankPaths;
    req.query = ctx.query;
    std::string demo_text;
    for (const auto& d : ctx.demos) demo_text += render_demonstration(d);
    req.query.text = demo_text.empty() ? ctx.query.text
                                       : demo_text + "current task: " + ctx.query.text;
    std::vector<CandidateRender> renders;
    renders.reserve(options.size());
    for (const auto& a : options) renders.push_back({a.describe(), ctx.page_text, 1});
    req.context.candidates = std::move(renders);
    try {
      const OracleVerdict v = budget_ ? budget_->judge(req) : oracle_.judge(req);
      return v.order.empty() ? options.front() : options[v.order.front()];
    } catch (const OracleBudgetExceeded&) {
      return Action::stop("");
    }
  }

  int oracle_calls() const override { return budget_ ? budget_->calls() : 0; }

 private:
  Oracle& oracle_;
  int max_calls_;
  std::optional<BudgetedOracle> budget_;
};

// ---------------------------------------------------------------------------
// Episode loop

// Observe -> decide -> step until Stop or the horizon cap. Environment errors
// become error observations, never exceptions.
inline Trajectory run_episode(const World& world, const TaskSpec& task, AgentPolicy& policy,
                              const std::vector<Demonstration>& demos, std::size_t horizon_cap) {
  Episode env(world, task.query.site);
  policy.begin_episode();
  Trajectory traj;
  traj.query_id = task.query.id;
  traj.initial = env.initial();
  std::vector<HistoryStep> history;
  while (!env.terminated() && traj.steps.size() < horizon_cap) {
    const std::string page = env.current_raw_page();
    PolicyContext ctx{task.query, page, history, demos};
    const Action action = policy.decide(ctx);
    Observation obs = env.step(action);
    history.push_back({action, obs.locator});
    traj.steps.push_back({action, std::move(obs)});
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Phase coordination

struct EpisodeResult {
  std::string query_id;
  std::string site;
  Trajectory trajectory;
  FailureLabel label = FailureLabel::Success;         // ground truth
  FailureLabel oracle_label = FailureLabel::Success;  // as classified when failed
  bool solved = false;
  std::size_t steps = 0;
  int oracle_calls = 0;
  int demonstrations_used = 0;
  int round = 0;
  std::string phase;  // "explore" | "infer"
};

inline nlohmann::json to_json(const EpisodeResult& r) {
  return {{"query_id", r.query_id},
          {"site", r.site},
          {"trajectory", to_json(r.trajectory)},
          {"label", to_string(r.label)},
          {"oracle_label", to_string(r.oracle_label)},
          {"solved", r.solved},
          {"steps", r.steps},
          {"oracle_calls", r.oracle_calls},
          {"demonstrations_used", r.demonstrations_used},
          {"round", r.round},
          {"phase", r.phase}};
}

inline EpisodeResult episode_result_from_json(const nlohmann::json& j) {
  EpisodeResult r;
  r.query_id = j.at("query_id").get<std::string>();
  r.site = j.at("site").get<std::string>();
  r.trajectory = trajectory_from_json(j.at("trajectory"));
  r.label = failure_label_from_string(j.at("label").get<std::string>());
  r.oracle_label = failure_label_from_string(j.at("oracle_label").get<std::string>());
  r.solved = j.at("solved").get<bool>();
  r.steps = j.at("steps").get<std::size_t>();
  r.oracle_calls = j.at("oracle_calls").get<int>();
  r.demonstrations_used = j.at("demonstrations_used").get<int>();
  r.round = j.at("round").get<int>();
  r.phase = j.at("phase").get<std::string>();
  return r;
}

struct RunOptions {
  std::size_t horizon_cap = 30;
  std::size_t explore_cap = 5;  // offline memory construction budget per task
  std::size_t k = 1;            // demonstrations retrieved per task
  SearchLimits search;
  int max_oracle_calls = 2000;  // per episode
  int parallelism = 1;
  bool trust_ground_truth = false;
  bool ablate_reflection = false;   // disable execution-failure reflection
  bool ablate_navigation = false;   // disable navigation repair
  bool validated_only = false;      // store only validated entries
  int round = 0;
  std::function<void(const std::string&)> log;  // optional diagnostics sink
};

namespace detail {

inline void log_line(const RunOptions& opts, const std::string& msg) {
  if (opts.log) opts.log(msg);
}

// Stores a value in memory and pins its trajectory's observations in the
// buffer so eviction can never orphan a stored path.
inline void store_value(const Query& q, const MemoryValue& value, BufferGraph& buf,
                        MemoryStore& mem, Oracle& oracle, const RunOptions& opts) {
  if (opts.validated_only && !value.validated()) return;
  const UpdateOutcome outcome = mem.update(q, value, oracle);
  if (outcome != UpdateOutcome::Kept) buf.pin_trajectory(value.trajectory);
}

// Shared post-episode pipeline: classify the failure, repair or reflect, and
// update memory. Successes are stored directly as validated entries.
inline void absorb_result(const TaskSpec& task, EpisodeResult& result, BufferGraph& buf,
                          MemoryStore& mem, Oracle& oracle, const RunOptions& opts) {
  BudgetedOracle budget(oracle, opts.max_oracle_calls);
  try {
    if (result.solved) {
      MemoryValue value{result.trajectory, "validated solution", FailureLabel::Success};
      store_value(task.query, value, buf, mem, budget, opts);
    } else {
      result.oracle_label = classify(result.trajectory, task.query, budget);
      if (result.oracle_label != result.label) {
        log_line(opts, "classify disagreement on " + task.query.id + ": oracle=" +
                           to_string(result.oracle_label) + " ground_truth=" +
                           to_string(result.label));
      }
      const FailureLabel effective = opts.trust_ground_truth ? result.label : result.oracle_label;
      if (effective == FailureLabel::NavigationFailure && !opts.ablate_navigation) {
        auto reflection =
            reflect_navigation(result.trajectory, task.query, buf, budget, opts.search);
        if (reflection) {
          MemoryValue value{reflection->truncated, reflection->rationale,
                            FailureLabel::NavigationFailure};
          store_value(task.query, value, buf, mem, budget, opts);
        }
      } else if (effective == FailureLabel::ExecutionFailure && !opts.ablate_reflection) {
        auto reflection = reflect_execution(result.trajectory, task.query, budget);
        MemoryValue value{reflection.truncated, reflection.rationale,
                          FailureLabel::ExecutionFailure};
        store_value(task.query, value, buf, mem, budget, opts);
      }
    }
  } catch (const OracleBudgetExceeded& e) {
    log_line(opts, "episode " + task.query.id + " aborted: " + e.what());
  }
  result.oracle_calls += budget.calls();
}

inline EpisodeResult run_one(const World& world, const TaskSpec& task,
                             const PolicyFactory& make_policy,
                             const std::vector<Demonstration>& demos, std::size_t cap,
                             const RunOptions& opts, const char* phase) {
  EpisodeResult r;
  r.query_id = task.query.id;
  r.site = task.query.site;
  r.phase = phase;
  r.round = opts.round;
  r.demonstrations_used = static_cast<int>(demos.size());
  auto policy = make_policy();
  r.trajectory = run_episode(world, task, *policy, demos, cap);
  r.steps = r.trajectory.horizon();
  r.oracle_calls = policy->oracle_calls();
  r.solved = validate(task, r.trajectory);
  r.label = classify_by_ground_truth(r.trajectory, task.key_obs, r.solved);
  r.oracle_label = r.label;
  return r;
}

// Episodes are pure given (world, task, demos); they run serially or in
// parallel with identical results. All mutation happens afterwards in task
// order.
inline std::vector<EpisodeResult> run_batch(
    const World& world, const std::vector<TaskSpec>& tasks, const PolicyFactory& make_policy,
    const std::vector<std::vector<Demonstration>>& demos_per_task, std::size_t cap,
    const RunOptions& opts, const char* phase) {
  std::vector<EpisodeResult> results(tasks.size());
  if (opts.parallelism <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      results[i] = run_one(world, tasks[i], make_policy, demos_per_task[i], cap, opts, phase);
    }
    return results;
  }
  std::vector<std::future<EpisodeResult>> futures(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    futures[i] = std::async(std::launch::async, [&, i] {
      return run_one(world, tasks[i], make_policy, demos_per_task[i], cap, opts, phase);
    });
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = futures[i].get();
  return results;
}

}  // namespace detail

// Exploration phase: run every task with the base policy (no demonstrations,
// short horizon), fold all observations into the buffer, then classify and
// correct failures and store outcomes in memory.
inline std::vector<EpisodeResult> run_exploration(const World& world,
                                                  const std::vector<TaskSpec>& tasks,
                                                  const PolicyFactory& make_policy,
                                                  BufferGraph& buf, MemoryStore& mem,
                                                  Oracle& oracle, const RunOptions& opts = {}) {
  const std::vector<std::vector<Demonstration>> no_demos(tasks.size());
  const std::size_t cap = std::min(opts.explore_cap, opts.horizon_cap);
  auto results = detail::run_batch(world, tasks, make_policy, no_demos, cap, opts, "explore");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    buf.ingest_episode(results[i].trajectory, tasks[i].query.site);
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    detail::absorb_result(tasks[i], results[i], buf, mem, oracle, opts);
  }
  return results;
}

// Inference phase: retrieve demonstrations from the phase-start memory
// (site-filtered), run every task at full horizon, then feed failures back
// through reflection and update memory.
inline std::vector<EpisodeResult> run_inference(const World& world,
                                                const std::vector<TaskSpec>& tasks,
                                                const PolicyFactory& make_policy, BufferGraph& buf,
                                                MemoryStore& mem, Oracle& oracle,
                                                const RunOptions& opts = {}) {
  std::vector<std::vector<Demonstration>> demos_per_task(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (mem.empty()) continue;
    // Demonstrations never leak across sites: filter before truncating to k.
    const auto hits = mem.lookup(tasks[i].query, std::max(opts.k, mem.size()));
    for (const auto& hit : hits) {
      if (hit.entry.query.site != tasks[i].query.site) continue;
      demos_per_task[i].push_back({hit.entry.query, hit.entry.value, hit.similarity});
      if (demos_per_task[i].size() >= opts.k) break;
    }
  }
  auto results =
      detail::run_batch(world, tasks, make_policy, demos_per_task, opts.horizon_cap, opts, "infer");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    buf.ingest_episode(results[i].trajectory, tasks[i].query.site);
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    detail::absorb_result(tasks[i], results[i], buf, mem, oracle, opts);
  }
  return results;
}

// Memoryless baseline: the base policy alone, full horizon, no buffer, no
// memory, no reflection.
inline std::vector<EpisodeResult> run_baseline(const World& world,
                                               const std::vector<TaskSpec>& tasks,
                                               const PolicyFactory& make_policy,
                                               const RunOptions& opts = {}) {
  const std::vector<std::vector<Demonstration>> no_demos(tasks.size());
  return detail::run_batch(world, tasks, make_policy, no_demos, opts.horizon_cap, opts, "infer");
}

}  // namespace retrace
