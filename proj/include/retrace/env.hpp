#pragma once

#include <nlohmann/json.hpp>

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "retrace/core.hpp"
#include "retrace/errors.hpp"

namespace retrace {

// ---------------------------------------------------------------------------
// World model

struct Element {
  std::string id;
  std::string role;  // link, button, field, heading, text, alert
  std::string text;
};

// Wires an element to what interacting with it does. Click transitions to
// `dest`; Type routes on the typed payload (falling back to `dest` when no
// route matches and dest is set).
struct Affordance {
  ActionKind kind = ActionKind::Click;
  std::string element_id;
  std::string dest;                               // may be empty for pure-route Type
  std::map<std::string, std::string> payload_routes;  // typed payload -> dest
};

struct PageSpec {
  std::string locator;
  std::vector<Element> elements;
  std::vector<Affordance> affordances;

  const Element* find_element(const std::string& id) const {
    for (const auto& e : elements) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  const Affordance* find_affordance(ActionKind kind, const std::string& element_id) const {
    for (const auto& a : affordances) {
      if (a.kind == kind && a.element_id == element_id) return &a;
    }
    return nullptr;
  }
};

// Raw page text as the agent sees it: address line plus elements in authored
// order. Hashing always goes through normalize_page() first.
inline std::string render_page(const PageSpec& page) {
  std::string out = "@page " + page.locator;
  for (const auto& e : page.elements) {
    out += "\nel " + e.id + "|" + e.role + "|" + e.text;
  }
  return out;
}

struct SiteGraph {
  std::string site_id;
  std::map<std::string, PageSpec> pages;  // locator -> page
  std::string root;
};

enum class ValidatorKind { AnswerEquals, AnswerContains, StateReached };

inline const char* to_string(ValidatorKind k) {
  switch (k) {
    case ValidatorKind::AnswerEquals: return "answer_equals";
    case ValidatorKind::AnswerContains: return "answer_contains";
    case ValidatorKind::StateReached: return "state_reached";
  }
  return "?";
}

inline ValidatorKind validator_kind_from_string(std::string_view s) {
  if (s == "answer_equals") return ValidatorKind::AnswerEquals;
  if (s == "answer_contains") return ValidatorKind::AnswerContains;
  if (s == "state_reached") return ValidatorKind::StateReached;
  throw SchemaError("unknown validator kind: " + std::string(s));
}

struct ValidatorSpec {
  ValidatorKind kind = ValidatorKind::AnswerEquals;
  std::string expected;  // answer text, or obs_id once resolved by the loader
};

struct TaskSpec {
  Query query;
  KeyObservationSet key_obs;
  ValidatorSpec validator;
};

struct World {
  std::string id;
  std::vector<SiteGraph> sites;
  std::vector<TaskSpec> tasks;
  // locator -> obs_id of the page's canonical state, per site.
  std::map<std::string, std::map<std::string, ObsId>> page_ids;

  const SiteGraph* find_site(const std::string& site_id) const {
    for (const auto& s : sites) {
      if (s.site_id == site_id) return &s;
    }
    return nullptr;
  }

  ObsId obs_id_of(const std::string& site_id, const std::string& locator) const {
    auto s = page_ids.find(site_id);
    if (s == page_ids.end()) throw DanglingLocator("site " + site_id);
    auto p = s->second.find(locator);
    if (p == s->second.end()) throw DanglingLocator(site_id + "/" + locator);
    return p->second;
  }
};

// ---------------------------------------------------------------------------
// World loading

inline constexpr int kWorldSchema = 1;

namespace detail {

inline PageSpec page_from_json(const nlohmann::json& j) {
  PageSpec p;
  p.locator = j.at("locator").get<std::string>();
  std::set<std::string> seen_ids;
  for (const auto& e : j.value("elements", nlohmann::json::array())) {
    Element el{e.at("id").get<std::string>(), e.at("role").get<std::string>(),
               e.at("text").get<std::string>()};
    if (!seen_ids.insert(el.id).second) {
      throw SchemaError("duplicate element id '" + el.id + "' on page " + p.locator);
    }
    p.elements.push_back(std::move(el));
  }
  for (const auto& a : j.value("affordances", nlohmann::json::array())) {
    Affordance af;
    af.kind = action_kind_from_string(a.at("action").get<std::string>());
    if (af.kind == ActionKind::Stop) throw SchemaError("stop cannot be an affordance");
    af.element_id = a.at("element").get<std::string>();
    af.dest = a.value("dest", "");
    if (a.contains("routes")) {
      af.payload_routes = a["routes"].get<std::map<std::string, std::string>>();
    }
    if (af.kind == ActionKind::Click && af.dest.empty()) {
      throw SchemaError("click affordance without dest on page " + p.locator);
    }
    if (af.kind == ActionKind::Type && af.dest.empty() && af.payload_routes.empty()) {
      throw SchemaError("type affordance without dest or routes on page " + p.locator);
    }
    if (!p.find_element(af.element_id)) {
      throw SchemaError("affordance targets unknown element '" + af.element_id + "' on page " +
                        p.locator);
    }
    p.affordances.push_back(std::move(af));
  }
  return p;
}

inline void check_site(const SiteGraph& site, const std::set<std::string>& task_pages) {
  if (!site.pages.count(site.root)) {
    throw DanglingLocator("root '" + site.root + "' of site " + site.site_id);
  }
  for (const auto& [loc, page] : site.pages) {
    for (const auto& af : page.affordances) {
      if (!af.dest.empty() && !site.pages.count(af.dest)) {
        throw DanglingLocator(af.dest + " (from " + loc + ")");
      }
      for (const auto& [payload, dest] : af.payload_routes) {
        if (!site.pages.count(dest)) {
          throw DanglingLocator(dest + " (typed route from " + loc + ")");
        }
      }
    }
  }
  // Every page referenced by a task must be reachable from the root.
  std::set<std::string> reached{site.root};
  std::deque<std::string> frontier{site.root};
  while (!frontier.empty()) {
    const PageSpec& page = site.pages.at(frontier.front());
    frontier.pop_front();
    auto visit = [&](const std::string& dest) {
      if (!dest.empty() && reached.insert(dest).second) frontier.push_back(dest);
    };
    for (const auto& af : page.affordances) {
      visit(af.dest);
      for (const auto& [payload, dest] : af.payload_routes) visit(dest);
    }
  }
  for (const auto& loc : task_pages) {
    if (!site.pages.count(loc)) throw DanglingLocator("task references " + site.site_id + "/" + loc);
    if (!reached.count(loc)) throw UnreachablePage(site.site_id + "/" + loc);
  }
}

}  // namespace detail

// Loads and validates a world file. Task key observations and StateReached
// expectations are written as page locators and resolved to obs_ids here.
inline World load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open world file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("world file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", 0) != kWorldSchema) {
    throw SchemaError("world file must declare schema: 1");
  }

  World world;
  world.id = doc.value("id", "unnamed");
  std::map<std::string, std::set<std::string>> task_pages;  // site -> locators used by tasks

  for (const auto& tj : doc.value("tasks", nlohmann::json::array())) {
    TaskSpec task;
    task.query = query_from_json(tj.at("query"));
    const auto key_obs = tj.at("key_obs").get<std::vector<std::string>>();
    if (key_obs.empty()) throw SchemaError("task " + task.query.id + " has empty key_obs");
    for (const auto& loc : key_obs) task_pages[task.query.site].insert(loc);
    task.validator.kind = validator_kind_from_string(tj.at("validator").at("kind").get<std::string>());
    task.validator.expected = tj.at("validator").at("expected").get<std::string>();
    if (task.validator.kind != ValidatorKind::StateReached && task.validator.expected.empty()) {
      throw SchemaError("task " + task.query.id + " has empty expected answer");
    }
    if (task.validator.kind == ValidatorKind::StateReached) {
      if (task.validator.expected.empty()) {
        throw SchemaError("task " + task.query.id + " has empty expected state");
      }
      task_pages[task.query.site].insert(task.validator.expected);
    }
    // key_obs carried as locators for now; resolved to obs_ids below.
    for (const auto& loc : key_obs) task.key_obs.members.insert(loc);
    world.tasks.push_back(std::move(task));
  }

  for (const auto& sj : doc.value("sites", nlohmann::json::array())) {
    SiteGraph site;
    site.site_id = sj.at("site_id").get<std::string>();
    site.root = sj.at("root").get<std::string>();
    for (const auto& pj : sj.at("pages")) {
      PageSpec page = detail::page_from_json(pj);
      if (site.pages.count(page.locator)) {
        throw SchemaError("duplicate page locator " + page.locator + " in site " + site.site_id);
      }
      site.pages.emplace(page.locator, std::move(page));
    }
    detail::check_site(site, task_pages[site.site_id]);
    auto& ids = world.page_ids[site.site_id];
    for (const auto& [loc, page] : site.pages) {
      ids[loc] = observation_hash(normalize_page(render_page(page)));
    }
    world.sites.push_back(std::move(site));
  }

  // Resolve task locators to obs_ids now that every site is hashed.
  for (auto& task : world.tasks) {
    if (!world.find_site(task.query.site)) {
      throw SchemaError("task " + task.query.id + " references unknown site " + task.query.site);
    }
    KeyObservationSet resolved;
    for (const auto& loc : task.key_obs.members) {
      resolved.members.insert(world.obs_id_of(task.query.site, loc));
    }
    task.key_obs = std::move(resolved);
    if (task.validator.kind == ValidatorKind::StateReached) {
      task.validator.expected = world.obs_id_of(task.query.site, task.validator.expected);
    }
  }
  return world;
}

// ---------------------------------------------------------------------------
// Episode state

// One agent episode against one site. Owns its cursor; worlds are immutable
// after load, so episodes can run in parallel.
class Episode {
 public:
  Episode(const World& world, const std::string& site_id) : world_(world) {
    site_ = world.find_site(site_id);
    if (!site_) throw DanglingLocator("site " + site_id);
    locator_ = site_->root;
    initial_ = make_root_observation(locator_, render_page(current_page()));
    prev_lines_ = state_lines(*initial_.full_state);
  }

  const Observation& initial() const { return initial_; }
  bool terminated() const { return terminated_; }
  const std::string& current_locator() const { return locator_; }
  const PageSpec& current_page() const { return site_->pages.at(locator_); }

  // What the agent sees this step, in authored element order, including any
  // pending error banner from the previous action.
  std::string current_raw_page() const {
    std::string raw = render_page(current_page());
    if (!pending_alert_.empty()) raw += "\nel err|alert|" + pending_alert_;
    return raw;
  }

  // Deterministic transition. Unknown targets become error observations, not
  // crashes; Stop freezes the episode without changing the page.
  Observation step(const Action& action) {
    if (terminated_) throw std::logic_error("episode already terminated");
    check_action(action);

    if (action.kind == ActionKind::Stop) {
      terminated_ = true;
      pending_alert_.clear();
      Observation o;
      o.locator = locator_;
      o.diff = {};  // page unchanged
      o.obs_id = observation_hash(join_lines(prev_lines_));
      return o;
    }

    const PageSpec& page = current_page();
    std::string next_locator;
    std::string alert;
    if (!page.find_element(action.target)) {
      alert = "no such element: " + action.target;
    } else if (const Affordance* af = page.find_affordance(action.kind, action.target)) {
      if (action.kind == ActionKind::Type) {
        auto route = af->payload_routes.find(action.payload);
        if (route != af->payload_routes.end()) {
          next_locator = route->second;
        } else if (!af->dest.empty()) {
          next_locator = af->dest;
        } else {
          alert = "input rejected: " + action.target;
        }
      } else {
        next_locator = af->dest;
      }
    } else {
      alert = "element not interactive: " + action.target;
    }

    if (!alert.empty()) {
      pending_alert_ = alert;
    } else {
      pending_alert_.clear();
      locator_ = next_locator;
    }

    auto next_lines = state_lines(current_raw_page());
    Observation o;
    o.locator = locator_;
    o.diff = diff_states(prev_lines_, next_lines);
    o.obs_id = observation_hash(join_lines(next_lines));
    prev_lines_ = std::move(next_lines);
    return o;
  }

 private:
  const World& world_;
  const SiteGraph* site_ = nullptr;
  std::string locator_;
  std::string pending_alert_;
  std::vector<std::string> prev_lines_;
  Observation initial_;
  bool terminated_ = false;
};

// True iff the task's validator predicate holds on a terminated trajectory.
inline bool validate(const TaskSpec& task, const Trajectory& traj) {
  switch (task.validator.kind) {
    case ValidatorKind::AnswerEquals:
      return traj.ends_with_stop() && traj.final_answer() == task.validator.expected;
    case ValidatorKind::AnswerContains:
      return traj.ends_with_stop() &&
             traj.final_answer().find(task.validator.expected) != std::string::npos;
    case ValidatorKind::StateReached:
      return traj.visited().count(task.validator.expected) > 0;
  }
  return false;
}

}  // namespace retrace
