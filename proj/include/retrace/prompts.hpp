#pragma once

namespace retrace::prompts {

// Prompt templates, one per oracle role. render_context() substitutes the
// {placeholders}; the copies under assets/prompts/ are the documented
// versions and a test keeps the two in sync.

inline constexpr const char* kHeuristic =
    "You estimate how promising a web page is for answering a task.\n"
    "Task: {query}\n"
    "Page:\n{page}\n"
    "Reply with a single number between 0 and 1, where 1 means the page or "
    "its outgoing links almost certainly lead to the answer.\n";

inline constexpr const char* kRelevance =
    "You judge whether a web page is relevant to a task.\n"
    "Task: {query}\n"
    "Page:\n{page}\n"
    "Reply yes if this page could directly contribute the answer, otherwise no.\n";

inline constexpr const char* kRankPaths =
    "You rank candidate navigation routes for a task by relevance and utility.\n"
    "Task: {query}\n"
    "Routes:\n{candidates}\n"
    "Reply with the route numbers ordered from best to worst.\n";

inline constexpr const char* kClassifyError =
    "You determine the error type of a failed agent trajectory.\n"
    "Task: {query}\n"
    "Trajectory:\n{trajectory}\n"
    "Label definitions:\n"
    "- navigation failure: the agent never reached some page essential to the task.\n"
    "- execution failure: the agent reached every essential page but still failed the task.\n"
    "Reply with exactly one label: navigation or execution.\n";

inline constexpr const char* kLocateFirstError =
    "You locate the first erroneous action in a failed agent trajectory.\n"
    "Task: {query}\n"
    "Trajectory:\n{trajectory}\n"
    "Reply with the 1-based index of the first action that went wrong "
    "(between 1 and {horizon}).\n";

inline constexpr const char* kReflect =
    "You write a short reflection on a failed agent trajectory.\n"
    "Task: {query}\n"
    "Trajectory:\n{trajectory}\n"
    "The first erroneous action is step {error_index}. Explain the mistake and "
    "a strategy to avoid it.\n";

inline constexpr const char* kUpdateDecision =
    "You compare two stored trajectories for the same task and decide which "
    "one is better for addressing it.\n"
    "Task: {query}\n"
    "Current value ({old_status}, {old_len} steps):\n{old}\n"
    "New value ({new_status}, {new_len} steps):\n{new}\n"
    "Reply keep to retain the current value or take to replace it.\n";

}  // namespace retrace::prompts
