#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "retrace/errors.hpp"
#include "retrace/runtime.hpp"

namespace retrace {

inline std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
  return buf;
}

inline std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

struct TaskOutcome {
  std::string query_id;
  std::string site;
  bool solved = false;
  std::size_t steps = 0;
  std::string label;
};

// Aggregated view of one run's results: headline success rates, step costs,
// the failure breakdown, and the per-round curve. A pure function of the
// results records.
struct MetricsReport {
  std::string world_id;
  std::string agent;
  int rounds = 0;
  std::size_t tasks = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double mean_steps_successful = 0.0;
  std::map<std::string, double> per_site_sr;
  std::map<std::string, std::size_t> per_site_tasks;
  // Final-round proportions over {success, navigation, execution}; sums to 1.
  std::map<std::string, double> breakdown;
  std::map<std::string, std::size_t> failure_counts;
  std::vector<double> round_curve;  // inference SR per round
  long total_oracle_calls = 0;
  std::vector<TaskOutcome> per_task;  // final-round outcome per task, sorted by id
};

// Builds the report from episode results. Headline numbers come from the
// final inference round; the curve covers every inference round.
inline MetricsReport build_report(const std::vector<EpisodeResult>& results,
                                  const std::string& world_id, const std::string& agent) {
  MetricsReport rep;
  rep.world_id = world_id;
  rep.agent = agent;
  int last_round = 0;
  for (const auto& r : results) {
    rep.total_oracle_calls += r.oracle_calls;
    if (r.phase == "infer" && r.round > last_round) last_round = r.round;
  }
  rep.rounds = last_round;

  std::map<int, std::pair<std::size_t, std::size_t>> per_round;  // round -> (solved, total)
  std::map<std::string, TaskOutcome> final_outcomes;
  for (const auto& r : results) {
    if (r.phase != "infer") continue;
    auto& [solved, total] = per_round[r.round];
    ++total;
    if (r.solved) ++solved;
    if (r.round == last_round) {
      final_outcomes[r.query_id] = {r.query_id, r.site, r.solved, r.steps, to_string(r.label)};
    }
  }
  for (const auto& [round, counts] : per_round) {
    rep.round_curve.push_back(counts.second == 0
                                  ? 0.0
                                  : static_cast<double>(counts.first) / counts.second);
  }

  rep.failure_counts = {{"success", 0}, {"navigation", 0}, {"execution", 0}};
  std::map<std::string, std::pair<std::size_t, std::size_t>> site_counts;
  double steps_sum = 0.0;
  for (const auto& [id, outcome] : final_outcomes) {
    rep.per_task.push_back(outcome);
    ++rep.tasks;
    auto& [site_solved, site_total] = site_counts[outcome.site];
    ++site_total;
    if (outcome.solved) {
      ++rep.successes;
      ++site_solved;
      steps_sum += static_cast<double>(outcome.steps);
    }
    ++rep.failure_counts[outcome.label];
  }
  rep.success_rate = rep.tasks ? static_cast<double>(rep.successes) / rep.tasks : 0.0;
  rep.mean_steps_successful = rep.successes ? steps_sum / rep.successes : 0.0;
  for (const auto& [site, counts] : site_counts) {
    rep.per_site_tasks[site] = counts.second;
    rep.per_site_sr[site] =
        counts.second ? static_cast<double>(counts.first) / counts.second : 0.0;
  }
  if (rep.tasks) {
    for (const auto& [label, count] : rep.failure_counts) {
      rep.breakdown[label] = static_cast<double>(count) / rep.tasks;
    }
  }
  return rep;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_task = nlohmann::json::array();
  for (const auto& t : r.per_task) {
    per_task.push_back({{"query_id", t.query_id},
                        {"site", t.site},
                        {"solved", t.solved},
                        {"steps", t.steps},
                        {"label", t.label}});
  }
  return {{"schema", 1},
          {"world", r.world_id},
          {"agent", r.agent},
          {"rounds", r.rounds},
          {"tasks", r.tasks},
          {"successes", r.successes},
          {"success_rate", r.success_rate},
          {"mean_steps_successful", r.mean_steps_successful},
          {"per_site_sr", r.per_site_sr},
          {"per_site_tasks", r.per_site_tasks},
          {"breakdown", r.breakdown},
          {"failure_counts", r.failure_counts},
          {"round_curve", r.round_curve},
          {"oracle_calls", r.total_oracle_calls},
          {"per_task", per_task}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  if (j.value("schema", 0) != 1) throw VersionMismatch("report schema");
  MetricsReport r;
  r.world_id = j.at("world").get<std::string>();
  r.agent = j.at("agent").get<std::string>();
  r.rounds = j.at("rounds").get<int>();
  r.tasks = j.at("tasks").get<std::size_t>();
  r.successes = j.at("successes").get<std::size_t>();
  r.success_rate = j.at("success_rate").get<double>();
  r.mean_steps_successful = j.at("mean_steps_successful").get<double>();
  r.per_site_sr = j.at("per_site_sr").get<std::map<std::string, double>>();
  r.per_site_tasks = j.at("per_site_tasks").get<std::map<std::string, std::size_t>>();
  r.breakdown = j.at("breakdown").get<std::map<std::string, double>>();
  r.failure_counts = j.at("failure_counts").get<std::map<std::string, std::size_t>>();
  r.round_curve = j.at("round_curve").get<std::vector<double>>();
  r.total_oracle_calls = j.at("oracle_calls").get<long>();
  for (const auto& t : j.at("per_task")) {
    r.per_task.push_back({t.at("query_id").get<std::string>(), t.at("site").get<std::string>(),
                          t.at("solved").get<bool>(), t.at("steps").get<std::size_t>(),
                          t.at("label").get<std::string>()});
  }
  return r;
}

inline std::string render_report(const MetricsReport& r) {
  std::ostringstream os;
  os << "run report (" << r.agent << ", world " << r.world_id << ")\n";
  os << "tasks: " << r.tasks << "\n";
  if (r.tasks == 0) {
    os << "no tasks: nothing to evaluate\n";
    return os.str();
  }
  os << "success rate: " << format_pct(r.success_rate) << " (" << r.successes << "/" << r.tasks
     << ")\n";
  os << "mean steps on successful tasks: " << format_num(r.mean_steps_successful) << "\n";
  os << "per-site success rate:\n";
  for (const auto& [site, sr] : r.per_site_sr) {
    os << "  " << site << ": " << format_pct(sr) << " (" << r.per_site_tasks.at(site)
       << " tasks)\n";
  }
  os << "failure breakdown: ";
  bool first = true;
  for (const auto& [label, frac] : r.breakdown) {
    if (!first) os << ", ";
    os << label << " " << format_pct(frac);
    first = false;
  }
  os << "\n";
  os << "per-round success rate:";
  for (double sr : r.round_curve) os << " " << format_pct(sr);
  os << "\n";
  os << "oracle calls: " << r.total_oracle_calls << "\n";
  return os.str();
}

// Delta report between a baseline run and a candidate run over the same task
// set.
struct ComparisonReport {
  double sr_delta = 0.0;                 // candidate - baseline
  double mean_step_delta = 0.0;          // over commonly-solved tasks
  double nav_reduction_pct = 0.0;        // % reduction in navigation failures
  std::size_t baseline_nav_failures = 0;
  std::size_t candidate_nav_failures = 0;
  std::size_t commonly_solved = 0;
  double baseline_mean_steps_common = 0.0;
  double candidate_mean_steps_common = 0.0;
};

inline ComparisonReport compare_runs(const MetricsReport& baseline,
                                     const MetricsReport& candidate) {
  std::set<std::string> base_ids, cand_ids;
  for (const auto& t : baseline.per_task) base_ids.insert(t.query_id);
  for (const auto& t : candidate.per_task) cand_ids.insert(t.query_id);
  if (base_ids != cand_ids) {
    throw TaskSetMismatch("reports cover different task sets (" +
                          std::to_string(base_ids.size()) + " vs " +
                          std::to_string(cand_ids.size()) + ")");
  }

  ComparisonReport out;
  out.sr_delta = candidate.success_rate - baseline.success_rate;
  out.baseline_nav_failures = baseline.failure_counts.at("navigation");
  out.candidate_nav_failures = candidate.failure_counts.at("navigation");
  if (out.baseline_nav_failures > 0) {
    out.nav_reduction_pct =
        100.0 *
        (static_cast<double>(out.baseline_nav_failures) - out.candidate_nav_failures) /
        static_cast<double>(out.baseline_nav_failures);
  }

  std::map<std::string, const TaskOutcome*> base_by_id;
  for (const auto& t : baseline.per_task) base_by_id[t.query_id] = &t;
  double base_steps = 0.0, cand_steps = 0.0;
  for (const auto& t : candidate.per_task) {
    const TaskOutcome* b = base_by_id.at(t.query_id);
    if (t.solved && b->solved) {
      ++out.commonly_solved;
      base_steps += static_cast<double>(b->steps);
      cand_steps += static_cast<double>(t.steps);
    }
  }
  if (out.commonly_solved) {
    out.baseline_mean_steps_common = base_steps / out.commonly_solved;
    out.candidate_mean_steps_common = cand_steps / out.commonly_solved;
    out.mean_step_delta = out.candidate_mean_steps_common - out.baseline_mean_steps_common;
  }
  return out;
}

inline nlohmann::json to_json(const ComparisonReport& c) {
  return {{"schema", 1},
          {"sr_delta", c.sr_delta},
          {"mean_step_delta", c.mean_step_delta},
          {"nav_reduction_pct", c.nav_reduction_pct},
          {"baseline_nav_failures", c.baseline_nav_failures},
          {"candidate_nav_failures", c.candidate_nav_failures},
          {"commonly_solved", c.commonly_solved},
          {"baseline_mean_steps_common", c.baseline_mean_steps_common},
          {"candidate_mean_steps_common", c.candidate_mean_steps_common}};
}

inline std::string render_comparison(const ComparisonReport& c) {
  std::ostringstream os;
  os << "comparison (candidate vs baseline)\n";
  os << "success rate delta: " << format_pct(c.sr_delta) << "\n";
  os << "navigation failures: " << c.baseline_nav_failures << " -> " << c.candidate_nav_failures
     << " (reduction " << format_num(c.nav_reduction_pct) << "%)\n";
  os << "commonly-solved tasks: " << c.commonly_solved << "\n";
  os << "mean steps on commonly-solved: " << format_num(c.baseline_mean_steps_common) << " -> "
     << format_num(c.candidate_mean_steps_common) << " (delta "
     << format_num(c.mean_step_delta) << ")\n";
  return os.str();
}

}  // namespace retrace
