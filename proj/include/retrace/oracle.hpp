#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "retrace/core.hpp"
#include "retrace/errors.hpp"
#include "retrace/prompts.hpp"

namespace retrace {

// ---------------------------------------------------------------------------
// Requests and verdicts

enum class OracleRole {
  Heuristic,
  Relevance,
  RankPaths,
  ClassifyError,
  LocateFirstError,
  Reflect,
  UpdateDecision,
};

inline const char* to_string(OracleRole r) {
  switch (r) {
    case OracleRole::Heuristic: return "heuristic";
    case OracleRole::Relevance: return "relevance";
    case OracleRole::RankPaths: return "rank";
    case OracleRole::ClassifyError: return "classify";
    case OracleRole::LocateFirstError: return "locate";
    case OracleRole::Reflect: return "reflect";
    case OracleRole::UpdateDecision: return "update";
  }
  return "?";
}

inline OracleRole oracle_role_from_string(std::string_view s) {
  if (s == "heuristic") return OracleRole::Heuristic;
  if (s == "relevance") return OracleRole::Relevance;
  if (s == "rank") return OracleRole::RankPaths;
  if (s == "classify") return OracleRole::ClassifyError;
  if (s == "locate") return OracleRole::LocateFirstError;
  if (s == "reflect") return OracleRole::Reflect;
  if (s == "update") return OracleRole::UpdateDecision;
  throw SchemaError("unknown oracle role: " + std::string(s));
}

struct CandidateRender {
  std::string actions_text;
  std::string terminal_page;
  std::size_t length = 0;
};

struct ValueRender {
  std::string text;
  bool validated = false;
  std::size_t length = 0;
};

// Role-specific context payload. judge() checks that the fields a role needs
// are present.
struct OracleContext {
  std::optional<std::string> page_text;                    // Heuristic, Relevance
  std::optional<std::string> trajectory_text;              // Classify, Locate, Reflect
  std::optional<std::size_t> horizon;                      // Locate
  std::optional<std::size_t> error_index;                  // Reflect
  std::optional<std::vector<CandidateRender>> candidates;  // RankPaths
  std::optional<ValueRender> old_value;                    // UpdateDecision
  std::optional<ValueRender> new_value;                    // UpdateDecision
};

struct OracleRequest {
  OracleRole role = OracleRole::Heuristic;
  Query query;
  OracleContext context;
};

enum class UpdateDecision { KeepOld, TakeNew };

struct OracleVerdict {
  OracleRole role = OracleRole::Heuristic;
  double promise = 0.0;                     // Heuristic, in [0,1], higher = more relevant
  bool relevant = false;                    // Relevance
  std::vector<std::size_t> order;           // RankPaths: candidate indices best-first
  std::vector<double> scores;               // RankPaths alternative: per-candidate scores
  FailureLabel label = FailureLabel::NavigationFailure;  // ClassifyError (never Success)
  std::size_t error_index = 0;              // LocateFirstError, 1-based
  std::string rationale;                    // Reflect
  UpdateDecision decision = UpdateDecision::KeepOld;  // UpdateDecision
};

namespace detail {

inline const std::string& require(const std::optional<std::string>& field, const char* name) {
  if (!field) throw MalformedVerdict(std::string("request missing context field: ") + name);
  return *field;
}

}  // namespace detail

// Deterministic textual rendering of a request per its role. The remote
// handle sends this verbatim; scripted matchers match substrings of it.
inline std::string render_context(const OracleRequest& req) {
  auto fill = [](std::string tmpl, std::initializer_list<std::pair<const char*, std::string>> subs) {
    for (const auto& [key, value] : subs) {
      const std::string needle = std::string("{") + key + "}";
      std::size_t pos;
      while ((pos = tmpl.find(needle)) != std::string::npos) {
        tmpl.replace(pos, needle.size(), value);
      }
    }
    return tmpl;
  };
  const std::string& q = req.query.text;
  const OracleContext& c = req.context;
  switch (req.role) {
    case OracleRole::Heuristic:
      return fill(prompts::kHeuristic, {{"query", q}, {"page", c.page_text.value_or("")}});
    case OracleRole::Relevance:
      return fill(prompts::kRelevance, {{"query", q}, {"page", c.page_text.value_or("")}});
    case OracleRole::RankPaths: {
      std::ostringstream os;
      if (c.candidates) {
        for (std::size_t i = 0; i < c.candidates->size(); ++i) {
          const auto& cand = (*c.candidates)[i];
          os << (i + 1) << ") " << cand.length << " steps: " << cand.actions_text << "\n"
             << "   ends at:\n" << cand.terminal_page << "\n";
        }
      }
      return fill(prompts::kRankPaths, {{"query", q}, {"candidates", os.str()}});
    }
    case OracleRole::ClassifyError:
      return fill(prompts::kClassifyError,
                  {{"query", q}, {"trajectory", c.trajectory_text.value_or("")}});
    case OracleRole::LocateFirstError:
      return fill(prompts::kLocateFirstError,
                  {{"query", q},
                   {"trajectory", c.trajectory_text.value_or("")},
                   {"horizon", std::to_string(c.horizon.value_or(0))}});
    case OracleRole::Reflect:
      return fill(prompts::kReflect, {{"query", q},
                                      {"trajectory", c.trajectory_text.value_or("")},
                                      {"error_index", std::to_string(c.error_index.value_or(0))}});
    case OracleRole::UpdateDecision: {
      const ValueRender old_v = c.old_value.value_or(ValueRender{});
      const ValueRender new_v = c.new_value.value_or(ValueRender{});
      return fill(prompts::kUpdateDecision,
                  {{"query", q},
                   {"old_status", old_v.validated ? "validated" : "not validated"},
                   {"old_len", std::to_string(old_v.length)},
                   {"old", old_v.text},
                   {"new_status", new_v.validated ? "validated" : "not validated"},
                   {"new_len", std::to_string(new_v.length)},
                   {"new", new_v.text}});
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// Oracle interface

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleVerdict judge(const OracleRequest& req) = 0;
};

namespace detail {

inline void check_request(const OracleRequest& req) {
  const OracleContext& c = req.context;
  switch (req.role) {
    case OracleRole::Heuristic:
    case OracleRole::Relevance:
      require(c.page_text, "page_text");
      break;
    case OracleRole::RankPaths:
      if (!c.candidates) throw MalformedVerdict("request missing context field: candidates");
      break;
    case OracleRole::ClassifyError:
      require(c.trajectory_text, "trajectory_text");
      break;
    case OracleRole::LocateFirstError:
      require(c.trajectory_text, "trajectory_text");
      if (!c.horizon) throw MalformedVerdict("request missing context field: horizon");
      break;
    case OracleRole::Reflect:
      require(c.trajectory_text, "trajectory_text");
      break;
    case OracleRole::UpdateDecision:
      if (!c.old_value || !c.new_value) {
        throw MalformedVerdict("request missing context field: old_value/new_value");
      }
      break;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scripted oracle
//
// A declarative rule table: (role, substring matchers over the query text and
// the rendered context) -> verdict, with per-role defaults, so a whole
// benchmark can be scripted from one JSON file. Fully deterministic and total.

struct ScriptedRule {
  OracleRole role = OracleRole::Heuristic;
  std::vector<std::string> query_contains;
  std::vector<std::string> context_contains;
  nlohmann::json verdict;  // role-specific fields, see parse_verdict
};

class ScriptedOracle : public Oracle {
 public:
  ScriptedOracle() = default;

  explicit ScriptedOracle(std::vector<ScriptedRule> rules) : rules_(std::move(rules)) {}

  static ScriptedOracle from_json(const nlohmann::json& doc) {
    ScriptedOracle o;
    if (doc.value("schema", 1) != 1) throw VersionMismatch("oracle rules schema");
    if (doc.contains("defaults")) {
      for (const auto& [role, verdict] : doc["defaults"].items()) {
        o.defaults_[to_index(oracle_role_from_string(role))] = verdict;
      }
    }
    for (const auto& r : doc.value("rules", nlohmann::json::array())) {
      ScriptedRule rule;
      rule.role = oracle_role_from_string(r.at("role").get<std::string>());
      rule.query_contains = r.value("query_contains", std::vector<std::string>{});
      rule.context_contains = r.value("context_contains", std::vector<std::string>{});
      rule.verdict = r.at("verdict");
      o.rules_.push_back(std::move(rule));
    }
    return o;
  }

  static ScriptedOracle from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open oracle rules: " + path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("oracle rules not valid JSON: ") + e.what());
    }
    return from_json(doc);
  }

  void add_rule(ScriptedRule rule) { rules_.push_back(std::move(rule)); }
  void set_default(OracleRole role, nlohmann::json verdict) {
    defaults_[to_index(role)] = std::move(verdict);
  }

  OracleVerdict judge(const OracleRequest& req) override {
    detail::check_request(req);
    const std::string rendered = render_context(req);
    for (const auto& rule : rules_) {
      if (rule.role != req.role) continue;
      if (!matches(rule, req.query.text, rendered)) continue;
      return parse_verdict(req, rule.verdict);
    }
    const auto& fallback = defaults_[to_index(req.role)];
    if (!fallback.is_null()) return parse_verdict(req, fallback);
    return builtin_default(req);
  }

 private:
  static std::size_t to_index(OracleRole r) { return static_cast<std::size_t>(r); }

  static bool matches(const ScriptedRule& rule, const std::string& query_text,
                      const std::string& rendered) {
    for (const auto& s : rule.query_contains) {
      if (query_text.find(s) == std::string::npos) return false;
    }
    for (const auto& s : rule.context_contains) {
      if (rendered.find(s) == std::string::npos) return false;
    }
    return true;
  }

  static OracleVerdict parse_verdict(const OracleRequest& req, const nlohmann::json& v) {
    OracleVerdict out;
    out.role = req.role;
    switch (req.role) {
      case OracleRole::Heuristic: {
        double p = v.at("promise").get<double>();
        if (p < 0.0 || p > 1.0) throw MalformedVerdict("scripted promise out of range");
        out.promise = p;
        break;
      }
      case OracleRole::Relevance:
        out.relevant = v.at("value").get<bool>();
        break;
      case OracleRole::RankPaths: {
        const std::size_t n = req.context.candidates->size();
        if (v.contains("order")) {
          out.order = v["order"].get<std::vector<std::size_t>>();
          for (auto i : out.order) {
            if (i >= n) throw MalformedVerdict("rank index out of range");
          }
        } else if (v.contains("scores")) {
          out.scores = v["scores"].get<std::vector<double>>();
          if (out.scores.size() != n) throw MalformedVerdict("rank scores size mismatch");
        }
        // An empty verdict means "no preference": callers fall back to the
        // deterministic tie-break, which also settles equal scores.
        break;
      }
      case OracleRole::ClassifyError: {
        out.label = failure_label_from_string(v.at("label").get<std::string>());
        if (out.label == FailureLabel::Success) {
          throw MalformedVerdict("classify verdict cannot be success");
        }
        break;
      }
      case OracleRole::LocateFirstError: {
        if (v.value("first_stop", false)) {
          out.error_index = first_stop_index(req);
        } else {
          out.error_index = v.at("index").get<std::size_t>();
        }
        break;
      }
      case OracleRole::Reflect:
        out.rationale = v.at("text").get<std::string>();
        break;
      case OracleRole::UpdateDecision: {
        const std::string policy = v.value("policy", "");
        if (policy == "prefer_validated_then_shorter") {
          out.decision = arbitrate(*req.context.old_value, *req.context.new_value);
        } else {
          const std::string d = v.at("decision").get<std::string>();
          if (d == "keep") {
            out.decision = UpdateDecision::KeepOld;
          } else if (d == "take") {
            out.decision = UpdateDecision::TakeNew;
          } else {
            throw MalformedVerdict("update decision must be keep or take");
          }
        }
        break;
      }
    }
    return out;
  }

  OracleVerdict builtin_default(const OracleRequest& req) const {
    OracleVerdict out;
    out.role = req.role;
    switch (req.role) {
      case OracleRole::Heuristic: out.promise = 0.5; break;
      case OracleRole::Relevance: out.relevant = false; break;
      case OracleRole::RankPaths: break;  // empty order -> tie-break
      case OracleRole::ClassifyError: out.label = FailureLabel::NavigationFailure; break;
      case OracleRole::LocateFirstError: out.error_index = first_stop_index(req); break;
      case OracleRole::Reflect:
        out.rationale = "Review the failed trajectory and adjust the plan.";
        break;
      case OracleRole::UpdateDecision:
        out.decision = arbitrate(*req.context.old_value, *req.context.new_value);
        break;
    }
    return out;
  }

  static std::size_t first_stop_index(const OracleRequest& req) {
    // Trajectory renderings number their steps; the first "stop:" line gives
    // the stop step. Falls back to the horizon when no stop is present.
    const std::string& t = req.context.trajectory_text.value_or("");
    std::size_t idx = 0;
    for (const auto& line : split_lines(t)) {
      std::size_t dot = line.find(". ");
      if (dot == std::string::npos) continue;
      if (line.find("stop:", dot) != std::string::npos) {
        try {
          idx = std::stoull(line.substr(0, dot));
        } catch (const std::exception&) {
          continue;
        }
        break;
      }
    }
    if (idx == 0) idx = req.context.horizon.value_or(1);
    return idx;
  }

  // Default arbitration: a validated trajectory beats a non-validated one, a
  // shorter validated trajectory beats a longer validated one, and between
  // two non-validated values the longer prefix wins. Equal -> keep.
  static UpdateDecision arbitrate(const ValueRender& old_v, const ValueRender& new_v) {
    if (new_v.validated != old_v.validated) {
      return new_v.validated ? UpdateDecision::TakeNew : UpdateDecision::KeepOld;
    }
    if (old_v.validated) {
      return new_v.length < old_v.length ? UpdateDecision::TakeNew : UpdateDecision::KeepOld;
    }
    return new_v.length > old_v.length ? UpdateDecision::TakeNew : UpdateDecision::KeepOld;
  }

  std::vector<ScriptedRule> rules_;
  std::array<nlohmann::json, 7> defaults_{};
};

// ---------------------------------------------------------------------------
// Budget wrapper

// Enforces the per-episode oracle call budget. The runtime wraps the shared
// handle in one of these per episode.
class BudgetedOracle : public Oracle {
 public:
  BudgetedOracle(Oracle& inner, int max_calls) : inner_(inner), max_calls_(max_calls) {}

  OracleVerdict judge(const OracleRequest& req) override {
    if (calls_ >= max_calls_) {
      throw OracleBudgetExceeded(std::to_string(max_calls_) + " calls");
    }
    ++calls_;
    return inner_.judge(req);
  }

  int calls() const { return calls_; }

 private:
  Oracle& inner_;
  int max_calls_;
  int calls_ = 0;
};

}  // namespace retrace
