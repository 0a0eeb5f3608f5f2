#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "retrace/errors.hpp"
#include "retrace/hash.hpp"

namespace retrace {

// ---------------------------------------------------------------------------
// Actions

enum class ActionKind { Click, Type, Stop };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Click: return "click";
    case ActionKind::Type: return "type";
    case ActionKind::Stop: return "stop";
  }
  return "?";
}

inline ActionKind action_kind_from_string(std::string_view s) {
  if (s == "click") return ActionKind::Click;
  if (s == "type") return ActionKind::Type;
  if (s == "stop") return ActionKind::Stop;
  throw SchemaError("unknown action kind: " + std::string(s));
}

// A typed interaction. Click has a target and no payload, Type has both,
// Stop has no target and carries the final answer in payload.
struct Action {
  ActionKind kind = ActionKind::Stop;
  std::string target;
  std::string payload;

  static Action click(std::string target) {
    if (target.empty()) throw std::invalid_argument("click needs a target");
    return {ActionKind::Click, std::move(target), ""};
  }
  static Action type_into(std::string target, std::string text) {
    if (target.empty() || text.empty()) throw std::invalid_argument("type needs target and payload");
    return {ActionKind::Type, std::move(target), std::move(text)};
  }
  static Action stop(std::string answer = "") { return {ActionKind::Stop, "", std::move(answer)}; }

  // Total order used for deterministic neighbor listings and tie-breaking:
  // kind rank, then target, then payload.
  std::string sort_key() const {
    char rank = kind == ActionKind::Click ? '0' : kind == ActionKind::Type ? '1' : '2';
    std::string key;
    key.reserve(target.size() + payload.size() + 3);
    key += rank;
    key += '\x1f';
    key += target;
    key += '\x1f';
    key += payload;
    return key;
  }

  std::string describe() const {
    switch (kind) {
      case ActionKind::Click: return "click '" + target + "'";
      case ActionKind::Type: return "type '" + payload + "' into '" + target + "'";
      case ActionKind::Stop: return "stop: " + payload;
    }
    return "?";
  }

  bool operator==(const Action&) const = default;
};

inline void check_action(const Action& a) {
  switch (a.kind) {
    case ActionKind::Click:
      if (a.target.empty() || !a.payload.empty()) throw std::invalid_argument("bad click action");
      break;
    case ActionKind::Type:
      if (a.target.empty() || a.payload.empty()) throw std::invalid_argument("bad type action");
      break;
    case ActionKind::Stop:
      if (!a.target.empty()) throw std::invalid_argument("bad stop action");
      break;
  }
}

inline nlohmann::json to_json(const Action& a) {
  return {{"kind", to_string(a.kind)}, {"target", a.target}, {"payload", a.payload}};
}

inline Action action_from_json(const nlohmann::json& j) {
  Action a;
  a.kind = action_kind_from_string(j.at("kind").get<std::string>());
  a.target = j.at("target").get<std::string>();
  a.payload = j.at("payload").get<std::string>();
  check_action(a);
  return a;
}

// ---------------------------------------------------------------------------
// Text helpers

// Lowercased alphanumeric runs. Shared by the embedder and the scripted
// policy's keyword matching.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Page normalization
//
// A page state is a set of lines ("el <id>|<role>|<text>" plus an "@page"
// address line). Normalization makes node identity deterministic in the face
// of noisy pages: volatile key=value attributes are dropped, the remaining
// attributes of a line are sorted, and lines are sorted and deduplicated.

inline bool is_volatile_attr(std::string_view token) {
  std::size_t eq = token.find('=');
  if (eq == std::string_view::npos || eq == 0) return false;
  std::string key(token.substr(0, eq));
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static const std::set<std::string> kVolatile = {"ts",  "time",  "timestamp", "session",
                                                  "sid", "token", "nonce",     "reqid"};
  return kVolatile.count(key) > 0;
}

inline bool is_attr_token(std::string_view token) {
  std::size_t eq = token.find('=');
  if (eq == std::string_view::npos || eq == 0) return false;
  for (char c : token.substr(0, eq)) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

inline std::string normalize_line(std::string_view line) {
  std::vector<std::string> plain, attrs;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (is_attr_token(cur)) {
      if (!is_volatile_attr(cur)) attrs.push_back(cur);
    } else {
      plain.push_back(cur);
    }
    cur.clear();
  };
  for (char ch : line) {
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      flush();
    } else {
      cur += ch;
    }
  }
  flush();
  std::sort(attrs.begin(), attrs.end());
  std::string out;
  for (const auto& t : plain) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  for (const auto& t : attrs) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// Canonical state lines: normalized, sorted, unique, empties dropped.
inline std::vector<std::string> state_lines(std::string_view raw) {
  std::vector<std::string> lines;
  for (const auto& l : split_lines(raw)) {
    std::string n = normalize_line(l);
    if (!n.empty()) lines.push_back(std::move(n));
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

inline std::string normalize_page(std::string_view raw) { return join_lines(state_lines(raw)); }

// ---------------------------------------------------------------------------
// Observations and diffs

using ObsId = std::string;

// Content hash of a normalized page state.
inline ObsId observation_hash(std::string_view normalized_state) {
  return sha256_hex(normalized_state);
}

// Element-level difference between two canonical states. Set semantics:
// applying a diff removes then adds lines, so diffs compose along any
// root-to-node path.
struct PageDiff {
  std::vector<std::string> removed;  // sorted
  std::vector<std::string> added;    // sorted

  bool empty() const { return removed.empty() && added.empty(); }
  bool operator==(const PageDiff&) const = default;
};

inline PageDiff diff_states(const std::vector<std::string>& prev,
                            const std::vector<std::string>& next) {
  PageDiff d;
  std::set_difference(prev.begin(), prev.end(), next.begin(), next.end(),
                      std::back_inserter(d.removed));
  std::set_difference(next.begin(), next.end(), prev.begin(), prev.end(),
                      std::back_inserter(d.added));
  return d;
}

inline std::vector<std::string> apply_diff(const std::vector<std::string>& state,
                                           const PageDiff& d) {
  std::set<std::string> s(state.begin(), state.end());
  for (const auto& l : d.removed) s.erase(l);
  for (const auto& l : d.added) s.insert(l);
  return {s.begin(), s.end()};
}

inline nlohmann::json to_json(const PageDiff& d) {
  return {{"del", d.removed}, {"add", d.added}};
}

inline PageDiff diff_from_json(const nlohmann::json& j) {
  PageDiff d;
  d.removed = j.at("del").get<std::vector<std::string>>();
  d.added = j.at("add").get<std::vector<std::string>>();
  return d;
}

// A web page state at a point in time, identified by the content hash of its
// normalized state and stored as a diff against its predecessor. Roots keep
// the full normalized state so diff chains have an anchor.
struct Observation {
  ObsId obs_id;
  PageDiff diff;
  std::string locator;
  std::optional<std::string> full_state;

  bool is_root() const { return full_state.has_value(); }
  bool operator==(const Observation&) const = default;
};

inline Observation make_root_observation(const std::string& locator, std::string_view raw_state) {
  Observation o;
  o.locator = locator;
  o.full_state = normalize_page(raw_state);
  o.obs_id = observation_hash(*o.full_state);
  return o;
}

inline nlohmann::json to_json(const Observation& o) {
  nlohmann::json j = {{"id", o.obs_id}, {"locator", o.locator}, {"diff", to_json(o.diff)}};
  if (o.full_state) j["full"] = *o.full_state;
  return j;
}

inline Observation observation_from_json(const nlohmann::json& j) {
  Observation o;
  o.obs_id = j.at("id").get<std::string>();
  o.locator = j.at("locator").get<std::string>();
  o.diff = diff_from_json(j.at("diff"));
  if (j.contains("full")) o.full_state = j["full"].get<std::string>();
  return o;
}

// ---------------------------------------------------------------------------
// Queries, trajectories, failure taxonomy

struct Query {
  std::string id;
  std::string text;
  std::string site;

  bool operator==(const Query&) const = default;
};

inline void check_query(const Query& q) {
  if (q.text.empty()) throw std::invalid_argument("query text must be non-empty");
}

inline nlohmann::json to_json(const Query& q) {
  return {{"id", q.id}, {"text", q.text}, {"site", q.site}};
}

inline Query query_from_json(const nlohmann::json& j) {
  Query q{j.at("id").get<std::string>(), j.at("text").get<std::string>(),
          j.at("site").get<std::string>()};
  check_query(q);
  return q;
}

// Ground-truth set of observations essential to solve a query. Only the
// simulator knows it.
struct KeyObservationSet {
  std::set<ObsId> members;
};

enum class FailureLabel { Success, NavigationFailure, ExecutionFailure };

inline const char* to_string(FailureLabel l) {
  switch (l) {
    case FailureLabel::Success: return "success";
    case FailureLabel::NavigationFailure: return "navigation";
    case FailureLabel::ExecutionFailure: return "execution";
  }
  return "?";
}

inline FailureLabel failure_label_from_string(std::string_view s) {
  if (s == "success") return FailureLabel::Success;
  if (s == "navigation") return FailureLabel::NavigationFailure;
  if (s == "execution") return FailureLabel::ExecutionFailure;
  throw SchemaError("unknown failure label: " + std::string(s));
}

struct Step {
  Action action;
  Observation obs;

  bool operator==(const Step&) const = default;
};

// One episode's action/observation sequence. `initial` is the page the agent
// started from (the site root); the observation sequence O consists of the
// step observations.
struct Trajectory {
  std::string query_id;
  Observation initial;
  std::vector<Step> steps;

  std::size_t horizon() const { return steps.size(); }

  std::set<ObsId> visited() const {
    std::set<ObsId> v;
    for (const auto& s : steps) v.insert(s.obs.obs_id);
    return v;
  }

  std::vector<Action> actions() const {
    std::vector<Action> a;
    a.reserve(steps.size());
    for (const auto& s : steps) a.push_back(s.action);
    return a;
  }

  bool ends_with_stop() const {
    return !steps.empty() && steps.back().action.kind == ActionKind::Stop;
  }

  std::string final_answer() const { return ends_with_stop() ? steps.back().action.payload : ""; }

  bool operator==(const Trajectory&) const = default;
};

inline nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"action", to_json(s.action)}, {"obs", to_json(s.obs)}});
  }
  return {{"query_id", t.query_id}, {"initial", to_json(t.initial)}, {"steps", steps}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.query_id = j.at("query_id").get<std::string>();
  t.initial = observation_from_json(j.at("initial"));
  for (const auto& s : j.at("steps")) {
    t.steps.push_back({action_from_json(s.at("action")), observation_from_json(s.at("obs"))});
  }
  return t;
}

// Renders a trajectory for oracle prompts and scripted matchers: the numbered
// action list plus the locators of visited pages.
inline std::string render_trajectory(const Trajectory& t) {
  std::ostringstream os;
  os << "start at " << t.initial.locator << "\n";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    os << (i + 1) << ". " << t.steps[i].action.describe() << " -> " << t.steps[i].obs.locator
       << "\n";
  }
  return os.str();
}

// Ground-truth failure taxonomy. A trajectory that misses any key observation
// failed at navigation; one that saw them all but still did not solve the
// task failed at execution.
inline FailureLabel classify_by_ground_truth(const Trajectory& traj,
                                             const KeyObservationSet& key_obs, bool solved) {
  if (traj.steps.empty()) throw InvalidTrajectory("empty trajectory");
  if (key_obs.members.empty()) throw std::invalid_argument("key observation set must be non-empty");
  if (solved) return FailureLabel::Success;
  const auto seen = traj.visited();
  for (const auto& id : key_obs.members) {
    if (!seen.count(id)) return FailureLabel::NavigationFailure;
  }
  return FailureLabel::ExecutionFailure;
}

}  // namespace retrace
