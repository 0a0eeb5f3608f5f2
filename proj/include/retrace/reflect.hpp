#pragma once

#include <optional>
#include <string>

#include "retrace/buffer.hpp"
#include "retrace/core.hpp"
#include "retrace/errors.hpp"
#include "retrace/oracle.hpp"
#include "retrace/search.hpp"

namespace retrace {

// Outcome of reflecting on a failed trajectory: the failure label, where it
// went wrong, the salvageable prefix, and a rationale for storage.
struct Reflection {
  Query failed_query;
  FailureLabel label = FailureLabel::ExecutionFailure;
  std::size_t first_error_index = 0;  // 1-based; execution failures only
  Trajectory truncated;
  std::string rationale;
  bool noop_repair = false;  // navigation repair reproduced the existing prefix
};

// Oracle-driven error classification of a failed episode. Always returns a
// non-Success label; ground-truth agreement is logged by the runtime, not
// decided here.
inline FailureLabel classify(const Trajectory& traj, const Query& q, Oracle& oracle) {
  if (traj.steps.empty()) throw InvalidTrajectory("empty trajectory");
  OracleRequest req;
  req.role = OracleRole::ClassifyError;
  req.query = q;
  req.context.trajectory_text = render_trajectory(traj);
  const OracleVerdict v = oracle.judge(req);
  if (v.label == FailureLabel::Success) throw MalformedVerdict("classifier returned success");
  return v.label;
}

// Execution-failure reflection: locate the first erroneous action, keep the
// strict prefix before it, and generate a rationale.
inline Reflection reflect_execution(const Trajectory& traj, const Query& q, Oracle& oracle) {
  if (traj.steps.empty()) throw InvalidTrajectory("empty trajectory");
  const std::string rendered = render_trajectory(traj);

  OracleRequest locate;
  locate.role = OracleRole::LocateFirstError;
  locate.query = q;
  locate.context.trajectory_text = rendered;
  locate.context.horizon = traj.horizon();
  const std::size_t error_index = oracle.judge(locate).error_index;
  if (error_index < 1 || error_index > traj.horizon()) {
    throw MalformedVerdict("first-error index " + std::to_string(error_index) +
                           " outside 1.." + std::to_string(traj.horizon()));
  }

  OracleRequest reflect;
  reflect.role = OracleRole::Reflect;
  reflect.query = q;
  reflect.context.trajectory_text = rendered;
  reflect.context.error_index = error_index;
  std::string rationale = oracle.judge(reflect).rationale;
  if (rationale.empty()) throw MalformedVerdict("empty reflection rationale");

  Reflection out;
  out.failed_query = q;
  out.label = FailureLabel::ExecutionFailure;
  out.first_error_index = error_index;
  out.truncated.query_id = traj.query_id;
  out.truncated.initial = traj.initial;
  out.truncated.steps.assign(traj.steps.begin(),
                             traj.steps.begin() + static_cast<std::ptrdiff_t>(error_index - 1));
  out.rationale = std::move(rationale);
  return out;
}

// Navigation-failure reflection: delegate to buffer search. On success the
// stored value is the corrected navigation prefix; the rationale notes the
// repair. nullopt when the buffer offers nothing relevant.
inline std::optional<Reflection> reflect_navigation(const Trajectory& traj, const Query& q,
                                                    const BufferGraph& buf, Oracle& oracle,
                                                    const SearchLimits& limits = {}) {
  auto corrected = repair_navigation(buf, traj, q, oracle, limits);
  if (!corrected) return std::nullopt;

  Reflection out;
  out.failed_query = q;
  out.label = FailureLabel::NavigationFailure;
  out.truncated = std::move(*corrected);

  const auto failed_actions = traj.actions();
  const auto fixed_actions = out.truncated.actions();
  out.noop_repair = fixed_actions.size() <= failed_actions.size() &&
                    std::equal(fixed_actions.begin(), fixed_actions.end(), failed_actions.begin());

  const std::string dest =
      out.truncated.steps.empty() ? out.truncated.initial.locator
                                  : out.truncated.steps.back().obs.locator;
  out.rationale = out.noop_repair
                      ? "Navigation: no-op repair; the existing prefix already reaches " + dest +
                            "."
                      : "Navigation: agent did not reach the required page; corrected route to " +
                            dest + " stored.";
  return out;
}

}  // namespace retrace
