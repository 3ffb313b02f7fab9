#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rehearsal {

// ── Reviews and samples ─────────────────────────────────────────

/// One product review. `char_len` counts Unicode scalar values of `text`
/// (whitespace included); it is stored so corpus-wide length filters do
/// not re-scan texts.
struct Review {
  std::string review_id;
  std::string product_id;
  std::string user_id;  // empty when the corpus has no user attribution
  std::string text;
  std::size_t char_len = 0;

  bool operator==(const Review&) const = default;
};

/// Builds a review with char_len computed from the text.
Review make_review(std::string review_id, std::string product_id,
                   std::string user_id, std::string text);

enum class Category { Clothing, Electronics, Home, Health };

enum class Tier { HighHigh, LowLow, HHPL, Unlabeled };

/// One test case: the product's review set, the user's same-category
/// history, and the held-out personalized review written by that user.
struct Sample {
  std::string sample_id;
  Category category = Category::Clothing;
  std::vector<Review> product_reviews;
  std::vector<Review> history;
  Review personalized_review;
  Tier tier = Tier::Unlabeled;

  bool operator==(const Sample&) const = default;
};

/// History-count and history-length bounds are strict on both sides.
inline constexpr std::size_t kHistoryCountMinExclusive = 5;
inline constexpr std::size_t kHistoryCountMaxExclusive = 50;
inline constexpr std::size_t kHistoryCharsMaxExclusive = 27000;

/// Returns human-readable violation descriptors; empty means the sample
/// satisfies every invariant. Violations are data, not failures.
std::vector<std::string> validate_sample(const Sample& s);

// ── Model wire types ────────────────────────────────────────────

enum class Role { System, User, Assistant };

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// `degenerate` marks a context-length refusal; the content is then the
/// literal string "None", which is what gets recorded downstream.
struct LlmResponse {
  std::string content;
  std::string model_name;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  bool degenerate = false;

  bool operator==(const LlmResponse&) const = default;
};

inline constexpr const char* kDegenerateContent = "None";

// ── Role-play transcript types ──────────────────────────────────

/// One user-agent turn. When `parsed` is false the Analysis/Suggestions
/// fields are empty and `raw` is all we have.
struct UserTurn {
  std::string analysis;
  std::string suggestions_text;
  std::string raw;
  bool parsed = false;

  /// Text handed to downstream stages: the concise suggestion when the
  /// turn parsed, the raw output otherwise.
  const std::string& suggestion_payload() const {
    return parsed ? suggestions_text : raw;
  }

  bool operator==(const UserTurn&) const = default;
};

struct SupervisorVerdict {
  std::string thought;
  std::vector<std::string> suggestion_items;
  bool passed = false;
  std::string raw;

  /// Text for the revise prompt's Expert Recommendations slot.
  std::string recommendations_payload() const;

  bool operator==(const SupervisorVerdict&) const = default;
};

struct Attempt {
  UserTurn turn;
  SupervisorVerdict verdict;

  bool operator==(const Attempt&) const = default;
};

/// Full transcript of the practice + formal loop for one sample.
struct SuggestionSession {
  std::vector<UserTurn> demos;
  std::vector<Attempt> practice_attempts;
  std::vector<Attempt> formal_attempts;
  std::optional<UserTurn> final_suggestion;
  bool passed = false;
  int iterations_used = 0;

  bool operator==(const SuggestionSession&) const = default;
};

// ── Evaluation scores ───────────────────────────────────────────

enum class JudgeMetric { AC, SC };
enum class JudgeScale { OneToFive, ZeroToHundred };

/// Six-axis judge scores. Missing axes (degenerate summaries, persistent
/// parse failures) stay absent; the average is over present axes only.
struct EvalScores {
  std::optional<int> product_ac;
  std::optional<int> product_sc;
  std::optional<int> history_ac;
  std::optional<int> history_sc;
  std::optional<int> user_ac;
  std::optional<int> user_sc;
  std::optional<double> avg;

  std::array<const std::optional<int>*, 6> axes() const {
    return {&product_ac, &product_sc, &history_ac,
            &history_sc, &user_ac,    &user_sc};
  }

  int present_count() const;
  std::optional<double> recompute_avg() const;

  /// Sets avg from the present axes.
  void finalize() { avg = recompute_avg(); }

  bool operator==(const EvalScores&) const = default;
};

// ── Run records ─────────────────────────────────────────────────

enum class Method { Rehearsal, PerSum, AnaPerSum, OnlySum, SumPerChan };

std::string to_string(Method m);
std::string display_name(Method m);
std::optional<Method> method_from_string(const std::string& s);

std::string to_string(Category c);
std::optional<Category> category_from_string(const std::string& s);

std::string to_string(Tier t);
std::optional<Tier> tier_from_string(const std::string& s);

struct RewriteCandidate {
  std::string text;
  EvalScores scores;

  bool operator==(const RewriteCandidate&) const = default;
};

struct TokenTally {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;

  void add(const LlmResponse& r) {
    if (r.prompt_tokens) prompt += *r.prompt_tokens;
    if (r.completion_tokens) completion += *r.completion_tokens;
  }

  bool operator==(const TokenTally&) const = default;
};

/// How far a record has progressed; drives resume.
enum class Stage { Init, Summary, Practice, Session, Generated, Scored };

std::string to_string(Stage s);
std::optional<Stage> stage_from_string(const std::string& s);

/// Persisted per-sample, per-method trace of every stage output.
struct RunRecord {
  std::string sample_id;
  Method method = Method::OnlySum;
  Stage stage = Stage::Init;
  std::optional<std::string> generic_summary;
  std::optional<SuggestionSession> session;
  std::vector<std::string> filtered_product_ids;  // kept product review ids
  std::optional<std::string> selected_history_id;
  std::vector<RewriteCandidate> rewrite_candidates;
  std::string final_summary;
  EvalScores scores;
  std::vector<std::string> flags;
  std::int64_t started_at_ms = 0;
  std::int64_t finished_at_ms = 0;
  TokenTally token_totals;

  bool operator==(const RunRecord&) const = default;
};

/// One canonical line per record; stable field names, UTF-8.
std::string serialize_run(const RunRecord& r);

/// Inverse of serialize_run. `line_number` (1-based) is attached to any
/// ParseError. The stored average is re-validated against the present
/// axes on load.
RunRecord deserialize_run(const std::string& line, std::size_t line_number = 0);

// Sample (de)serialization for dataset files; same conventions.
std::string serialize_sample(const Sample& s);
Sample deserialize_sample(const std::string& line, std::size_t line_number = 0);

}  // namespace rehearsal
