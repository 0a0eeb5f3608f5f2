#pragma once

// Remote oracle client. Minimal HTTP POST transport for driving the same
// judgment roles with a real model behind an endpoint. Kept out of oracle.hpp
// so scripted-only builds don't pull in the HTTP stack.

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "retrace/oracle.hpp"

namespace retrace {

struct RemoteOracleConfig {
  std::string endpoint;            // e.g. http://127.0.0.1:8808
  std::string path = "/judge";
  std::string auth_env = "";       // name of env var holding a bearer token
  int timeout_ms = 10000;
  int retries = 2;

  // Env overrides: RETRACE_ORACLE_ENDPOINT, RETRACE_ORACLE_TOKEN_ENV,
  // RETRACE_ORACLE_TIMEOUT_MS, RETRACE_ORACLE_RETRIES.
  static RemoteOracleConfig from_env(RemoteOracleConfig base) {
    if (const char* e = std::getenv("RETRACE_ORACLE_ENDPOINT")) base.endpoint = e;
    if (const char* e = std::getenv("RETRACE_ORACLE_TOKEN_ENV")) base.auth_env = e;
    if (const char* e = std::getenv("RETRACE_ORACLE_TIMEOUT_MS")) base.timeout_ms = std::atoi(e);
    if (const char* e = std::getenv("RETRACE_ORACLE_RETRIES")) base.retries = std::atoi(e);
    return base;
  }
  static RemoteOracleConfig from_env() { return from_env(RemoteOracleConfig{}); }
};

namespace detail {

// Per-role result schema advertised to the endpoint and enforced on replies.
inline nlohmann::json role_result_schema(OracleRole role) {
  switch (role) {
    case OracleRole::Heuristic: return {{"promise", "number in [0,1]"}};
    case OracleRole::Relevance: return {{"value", "boolean"}};
    case OracleRole::RankPaths: return {{"order", "array of 0-based candidate indices"}};
    case OracleRole::ClassifyError: return {{"label", "one of: navigation, execution"}};
    case OracleRole::LocateFirstError: return {{"index", "1-based step index"}};
    case OracleRole::Reflect: return {{"text", "non-empty rationale"}};
    case OracleRole::UpdateDecision: return {{"decision", "one of: keep, take"}};
  }
  return {};
}

}  // namespace detail

class RemoteOracle : public Oracle {
 public:
  explicit RemoteOracle(RemoteOracleConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw SchemaError("remote oracle endpoint not configured");
  }

  OracleVerdict judge(const OracleRequest& req) override {
    detail::check_request(req);
    std::lock_guard<std::mutex> lock(mutex_);  // calls within one episode are sequential
    const std::string prompt = render_context(req);
    nlohmann::json body = {{"role", to_string(req.role)},
                           {"prompt", prompt},
                           {"query", req.query.text},
                           {"schema", detail::role_result_schema(req.role)}};
    try {
      return parse(req, post(body));
    } catch (const MalformedVerdict&) {
      // One automatic repair re-ask covers both unparseable replies and
      // wrong-shaped results.
      body["prompt"] = prompt + "\nReturn strictly valid JSON matching the schema.";
      return parse(req, post(body));
    }
  }

 private:
  nlohmann::json post(const nlohmann::json& body) {
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
      if (const char* token = std::getenv(config_.auth_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
      }
    }
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      auto res = client.Post(config_.path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      try {
        nlohmann::json reply = nlohmann::json::parse(res->body);
        if (!reply.contains("result")) throw MalformedVerdict("reply missing result");
        return reply["result"];
      } catch (const nlohmann::json::exception& e) {
        throw MalformedVerdict(std::string("reply not valid JSON: ") + e.what());
      }
    }
    throw OracleUnavailable(last_error);
  }

  OracleVerdict parse(const OracleRequest& req, const nlohmann::json& result) {
    OracleVerdict out;
    out.role = req.role;
    try {
      switch (req.role) {
        case OracleRole::Heuristic: {
          double p = result.at("promise").get<double>();
          if (p < 0.0 || p > 1.0) {
            std::cerr << "[retrace] warning: remote promise " << p << " clamped to [0,1]\n";
            p = std::min(1.0, std::max(0.0, p));
          }
          out.promise = p;
          break;
        }
        case OracleRole::Relevance:
          out.relevant = result.at("value").get<bool>();
          break;
        case OracleRole::RankPaths: {
          out.order = result.at("order").get<std::vector<std::size_t>>();
          for (auto i : out.order) {
            if (i >= req.context.candidates->size()) {
              throw MalformedVerdict("rank index out of range");
            }
          }
          break;
        }
        case OracleRole::ClassifyError:
          out.label = failure_label_from_string(result.at("label").get<std::string>());
          if (out.label == FailureLabel::Success) {
            throw MalformedVerdict("classify verdict cannot be success");
          }
          break;
        case OracleRole::LocateFirstError:
          out.error_index = result.at("index").get<std::size_t>();
          if (out.error_index < 1) throw MalformedVerdict("locate index must be >= 1");
          break;
        case OracleRole::Reflect:
          out.rationale = result.at("text").get<std::string>();
          if (out.rationale.empty()) throw MalformedVerdict("empty rationale");
          break;
        case OracleRole::UpdateDecision: {
          const std::string d = result.at("decision").get<std::string>();
          if (d == "keep") {
            out.decision = UpdateDecision::KeepOld;
          } else if (d == "take") {
            out.decision = UpdateDecision::TakeNew;
          } else {
            throw MalformedVerdict("update decision must be keep or take");
          }
          break;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedVerdict(std::string("result shape: ") + e.what());
    }
    return out;
  }

  RemoteOracleConfig config_;
  std::mutex mutex_;
};

// Remote embedding call used by the Remote embedder variant. Separate route,
// same endpoint conventions as the judgment roles.
inline std::vector<double> remote_embed(const RemoteOracleConfig& config, const std::string& text,
                                        int dim) {
  httplib::Client client(config.endpoint);
  client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
  nlohmann::json body = {{"role", "embed"}, {"text", text}, {"dim", dim}};
  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res) {
      last_error = "transport error " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      auto reply = nlohmann::json::parse(res->body);
      auto vec = reply.at("vector").get<std::vector<double>>();
      if (static_cast<int>(vec.size()) != dim) throw MalformedVerdict("embedding dim mismatch");
      return vec;
    } catch (const nlohmann::json::exception& e) {
      throw MalformedVerdict(std::string("embed reply: ") + e.what());
    }
  }
  throw OracleUnavailable(last_error);
}

}  // namespace retrace
