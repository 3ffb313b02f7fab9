#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "rehearsal/gateway.hpp"

namespace rehearsal {

/// One scripted response rule. Rules are tried in insertion order; the
/// first whose tag, substring matchers and predicate all accept wins.
struct ScriptedRule {
  std::string tag;       // empty = any call tag
  std::string contains;  // empty = no content requirement
  std::vector<std::string> contains_all;
  std::function<bool(const std::vector<ChatMessage>&)> predicate;

  /// Responses consumed in order across matching calls; the last one
  /// repeats. Ignored when `generator` is set.
  std::vector<std::string> responses;

  /// Seeded response generator. The engine is derived per call from
  /// (backend seed, tag, messages), so identical inputs always produce
  /// identical output regardless of interleaving.
  std::function<std::string(const std::vector<ChatMessage>&, std::mt19937_64&)>
      generator;

  int latency_ms = 0;    // simulated work, for concurrency tests
  int fail_times = 0;    // first N matching calls raise a transient error
  bool context_length_error = false;  // simulate provider context rejection
};

struct ScriptedCall {
  std::string tag;
  std::vector<ChatMessage> messages;
  std::chrono::steady_clock::time_point start;
  std::chrono::steady_clock::time_point end;
  int concurrent_at_start = 0;
};

/// Deterministic offline backend. Also keeps a call ledger (per-tag
/// counts, timings, concurrency high-water mark) that tests and the
/// acceptance suite assert against.
class ScriptedBackend : public ChatBackend {
public:
  explicit ScriptedBackend(std::uint64_t seed = 0) : seed_(seed) {}

  void add_rule(ScriptedRule rule);

  /// Loads rules from a JSON script:
  ///   {"rules": [{"tag": "...", "contains": "...", "contains_all": [...],
  ///               "response": "...", "responses": [...], "latency_ms": 0,
  ///               "fail_times": 0, "context_length_error": false}, ...]}
  static std::shared_ptr<ScriptedBackend> from_script_file(
      const std::filesystem::path& path, std::uint64_t seed);

  LlmResponse complete_raw(const std::vector<ChatMessage>& messages,
                           const std::string& call_tag) override;

  // Ledger access.
  std::vector<ScriptedCall> calls() const;
  std::size_t call_count() const;
  std::size_t call_count(const std::string& tag) const;
  std::map<std::string, std::size_t> counts_by_tag() const;
  int concurrency_high_water() const;
  void reset_ledger();

private:
  std::uint64_t seed_;
  std::vector<ScriptedRule> rules_;
  std::vector<std::size_t> consumed_;  // per-rule matched-call count

  mutable std::mutex mutex_;
  std::vector<ScriptedCall> ledger_;
  int in_flight_ = 0;
  int high_water_ = 0;
};

}  // namespace rehearsal
