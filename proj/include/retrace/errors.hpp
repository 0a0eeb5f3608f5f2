#pragma once

#include <stdexcept>
#include <string>

namespace retrace {

// Persistence / fixture loading
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error("schema error: " + what) {}
};
struct VersionMismatch : std::runtime_error {
  explicit VersionMismatch(const std::string& what) : std::runtime_error("version mismatch: " + what) {}
};

// World validation
struct DanglingLocator : std::runtime_error {
  explicit DanglingLocator(const std::string& what) : std::runtime_error("dangling locator: " + what) {}
};
struct UnreachablePage : std::runtime_error {
  explicit UnreachablePage(const std::string& what) : std::runtime_error("unreachable page: " + what) {}
};

// Buffer graph
struct UnknownNode : std::runtime_error {
  explicit UnknownNode(const std::string& id) : std::runtime_error("unknown node: " + id) {}
};
struct BrokenChain : std::runtime_error {
  explicit BrokenChain(const std::string& what) : std::runtime_error("broken diff chain: " + what) {}
};

// Search
struct NoRoot : std::runtime_error {
  explicit NoRoot(const std::string& site) : std::runtime_error("no root for site: " + site) {}
};
struct NotVisited : std::runtime_error {
  explicit NotVisited(const std::string& id) : std::runtime_error("node not visited by this search: " + id) {}
};

// Trajectories
struct InvalidTrajectory : std::invalid_argument {
  explicit InvalidTrajectory(const std::string& what) : std::invalid_argument("invalid trajectory: " + what) {}
};

// Oracle
struct OracleUnavailable : std::runtime_error {
  explicit OracleUnavailable(const std::string& what) : std::runtime_error("oracle unavailable: " + what) {}
};
struct MalformedVerdict : std::runtime_error {
  explicit MalformedVerdict(const std::string& what) : std::runtime_error("malformed verdict: " + what) {}
};
struct OracleBudgetExceeded : std::runtime_error {
  explicit OracleBudgetExceeded(const std::string& what) : std::runtime_error("oracle budget exceeded: " + what) {}
};

// Reports
struct TaskSetMismatch : std::runtime_error {
  explicit TaskSetMismatch(const std::string& what) : std::runtime_error("task set mismatch: " + what) {}
};

}  // namespace retrace
