#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retrace/core.hpp"
#include "retrace/errors.hpp"
#include "retrace/hash.hpp"
#include "retrace/oracle.hpp"
#include "retrace/record_io.hpp"

namespace retrace {

// ---------------------------------------------------------------------------
// Embedder

enum class EmbedMethod { HashedBagOfWords, Remote };

inline const char* to_string(EmbedMethod m) {
  return m == EmbedMethod::HashedBagOfWords ? "hashed_bow" : "remote";
}

inline EmbedMethod embed_method_from_string(std::string_view s) {
  if (s == "hashed_bow") return EmbedMethod::HashedBagOfWords;
  if (s == "remote") return EmbedMethod::Remote;
  throw SchemaError("unknown embed method: " + std::string(s));
}

// Deterministic query embedder. The default hashes lowercased tokens into dim
// buckets, counts, and L2-normalizes; the remote variant defers to a
// configured endpoint via the hook below.
struct Embedder {
  int dim = 256;
  EmbedMethod method = EmbedMethod::HashedBagOfWords;
  // Remote hook, installed by callers that configure a remote endpoint.
  std::function<std::vector<double>(const std::string&, int)> remote_fn;

  std::vector<double> embed(const std::string& text) const {
    if (method == EmbedMethod::Remote) {
      if (!remote_fn) throw OracleUnavailable("remote embedder not configured");
      std::vector<double> v = remote_fn(text, dim);
      normalize(v);
      return v;
    }
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    const auto tokens = tokenize(text);
    if (tokens.empty()) {
      v[0] = 1.0;  // zero-safe fallback basis vector
      return v;
    }
    for (const auto& tok : tokens) {
      v[fnv1a64(tok) % static_cast<std::uint64_t>(dim)] += 1.0;
    }
    normalize(v);
    return v;
  }

  static void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      if (!v.empty()) v[0] = 1.0;
      return;
    }
    for (double& x : v) x /= norm;
  }
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot;  // inputs are unit vectors
}

// ---------------------------------------------------------------------------
// Store

// What a key maps to: a corrected or truncated trajectory, the reflection
// rationale, and the label it was stored under (Success for validated runs).
struct MemoryValue {
  Trajectory trajectory;
  std::string rationale;
  FailureLabel label_at_store = FailureLabel::Success;

  bool validated() const { return label_at_store == FailureLabel::Success; }
};

inline nlohmann::json to_json(const MemoryValue& v) {
  return {{"trajectory", to_json(v.trajectory)},
          {"rationale", v.rationale},
          {"label", to_string(v.label_at_store)}};
}

inline MemoryValue memory_value_from_json(const nlohmann::json& j) {
  MemoryValue v;
  v.trajectory = trajectory_from_json(j.at("trajectory"));
  v.rationale = j.at("rationale").get<std::string>();
  v.label_at_store = failure_label_from_string(j.at("label").get<std::string>());
  return v;
}

struct MemoryEntry {
  std::vector<double> key_vec;  // unit vector, = embed(query.text)
  Query query;
  MemoryValue value;
  std::uint64_t version = 1;
};

enum class UpdateOutcome { Inserted, Replaced, Kept };

inline const char* to_string(UpdateOutcome o) {
  switch (o) {
    case UpdateOutcome::Inserted: return "inserted";
    case UpdateOutcome::Replaced: return "replaced";
    case UpdateOutcome::Kept: return "kept";
  }
  return "?";
}

struct LookupHit {
  MemoryEntry entry;
  double similarity = 0.0;
};

// Key-value reflective memory: query embeddings to corrected/truncated
// trajectories plus rationales. Lookup is an exhaustive cosine scan (exact by
// construction); Update arbitration defers to the oracle once a near-duplicate
// key exists.
class MemoryStore {
 public:
  explicit MemoryStore(Embedder embedder = {}, double dedup_threshold = 0.95,
                       double min_similarity = 0.30)
      : embedder_(std::move(embedder)),
        dedup_threshold_(dedup_threshold),
        min_similarity_(min_similarity) {}

  const Embedder& embedder() const { return embedder_; }
  double dedup_threshold() const { return dedup_threshold_; }
  double min_similarity() const { return min_similarity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<MemoryEntry>& entries() const { return entries_; }

  // Top-k entries by cosine similarity, descending, insertion order on ties,
  // entries below min_similarity excluded.
  std::vector<LookupHit> lookup(const Query& q, std::size_t k) const {
    if (k < 1) throw std::invalid_argument("lookup needs k >= 1");
    const auto qv = embedder_.embed(q.text);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double sim = cosine(qv, entries_[i].key_vec);
      if (sim >= min_similarity_) scored.emplace_back(sim, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;  // stable keeps insertion order on ties
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<LookupHit> out;
    out.reserve(scored.size());
    for (const auto& [sim, idx] : scored) out.push_back({entries_[idx], sim});
    return out;
  }

  // Insert-or-arbitrate. A new key with no near-duplicate is inserted; when a
  // near-duplicate exists the oracle compares old and new values. An
  // unavailable oracle keeps the old value.
  UpdateOutcome update(const Query& q, const MemoryValue& value, Oracle& oracle) {
    const auto qv = embedder_.embed(q.text);
    std::optional<std::size_t> best;
    double best_sim = -2.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double sim = cosine(qv, entries_[i].key_vec);
      if (sim > best_sim) {
        best_sim = sim;
        best = i;
      }
    }
    if (!best || best_sim < dedup_threshold_) {
      entries_.push_back({qv, q, value, 1});
      return UpdateOutcome::Inserted;
    }

    MemoryEntry& existing = entries_[*best];
    OracleRequest req;
    req.role = OracleRole::UpdateDecision;
    req.query = q;
    req.context.old_value = ValueRender{render_trajectory(existing.value.trajectory) +
                                            existing.value.rationale,
                                        existing.value.validated(),
                                        existing.value.trajectory.horizon()};
    req.context.new_value = ValueRender{render_trajectory(value.trajectory) + value.rationale,
                                        value.validated(), value.trajectory.horizon()};
    try {
      if (oracle.judge(req).decision == UpdateDecision::TakeNew) {
        existing.value = value;
        ++existing.version;
        return UpdateOutcome::Replaced;
      }
    } catch (const OracleUnavailable&) {
      return UpdateOutcome::Kept;  // conservative
    }
    return UpdateOutcome::Kept;
  }

  void persist(const std::string& path) const {
    RecordWriter w(path, "memory", kSchema);
    w.write({{"meta",
              {{"dim", embedder_.dim},
               {"method", to_string(embedder_.method)},
               {"dedup_threshold", dedup_threshold_},
               {"min_similarity", min_similarity_},
               {"count", entries_.size()}}}});
    for (const auto& e : entries_) {
      w.write({{"entry",
                {{"key_vec", e.key_vec},
                 {"query", to_json(e.query)},
                 {"value", to_json(e.value)},
                 {"version", e.version}}}});
    }
  }

  static MemoryStore load(const std::string& path) {
    RecordReader r(path, "memory", kSchema);
    nlohmann::json rec;
    if (!r.next(rec) || !rec.contains("meta")) throw SchemaError("memory store missing meta");
    const nlohmann::json meta = rec["meta"];  // by value: rec is reused below
    Embedder e;
    e.dim = meta.at("dim").get<int>();
    e.method = embed_method_from_string(meta.at("method").get<std::string>());
    MemoryStore store(e, meta.at("dedup_threshold").get<double>(),
                      meta.at("min_similarity").get<double>());
    while (r.next(rec)) {
      if (!rec.contains("entry")) throw SchemaError("unrecognized memory record");
      const auto& ej = rec["entry"];
      MemoryEntry entry;
      entry.key_vec = ej.at("key_vec").get<std::vector<double>>();
      if (entry.key_vec.size() != static_cast<std::size_t>(e.dim)) {
        throw SchemaError("entry key dimension mismatch");
      }
      entry.query = query_from_json(ej.at("query"));
      entry.value = memory_value_from_json(ej.at("value"));
      entry.version = ej.at("version").get<std::uint64_t>();
      store.entries_.push_back(std::move(entry));
    }
    if (store.entries_.size() != meta.at("count").get<std::size_t>()) {
      throw SchemaError("memory store entry count mismatch");
    }
    return store;
  }

  bool operator==(const MemoryStore& other) const {
    if (entries_.size() != other.entries_.size() || embedder_.dim != other.embedder_.dim ||
        embedder_.method != other.embedder_.method ||
        dedup_threshold_ != other.dedup_threshold_ ||
        min_similarity_ != other.min_similarity_) {
      return false;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = other.entries_[i];
      if (a.key_vec != b.key_vec || !(a.query == b.query) || a.version != b.version ||
          !(a.value.trajectory == b.value.trajectory) || a.value.rationale != b.value.rationale ||
          a.value.label_at_store != b.value.label_at_store) {
        return false;
      }
    }
    return true;
  }

 private:
  static constexpr int kSchema = 1;

  Embedder embedder_;
  double dedup_threshold_;
  double min_similarity_;
  std::vector<MemoryEntry> entries_;
};

}  // namespace retrace
