#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rehearsal/domain.hpp"
#include "rehearsal/gateway.hpp"
#include "rehearsal/judge.hpp"
#include "rehearsal/prompts.hpp"
#include "rehearsal/rng.hpp"

namespace rehearsal {

struct FilterConfig {
  std::size_t product_char_budget = 10000;
  int removal_retry_soft = 5;
  int removal_retry_hard = 8;
  int history_retry = 5;
};

/// Number of reviews to remove so the set fits the budget:
/// max(0, ceil((total - budget) / avg)). Zero when already within budget.
int removal_target(std::size_t total_chars, double avg_chars,
                   std::size_t budget);

struct FilterResult {
  std::vector<Review> kept;
  std::vector<std::string> removed_ids;
  int model_calls = 0;
  int retries = 0;
  bool used_random_fallback = false;
  bool split = false;
  std::string error;  // gateway hard error; random removal took over
};

struct HistorySelection {
  Review review;
  int model_calls = 0;
  bool used_rouge_fallback = false;
};

struct RewriteOutcome {
  std::string final_text;
  std::vector<RewriteCandidate> candidates;
  int winning_index = -1;  // -1 when every candidate degenerated
  bool degraded = false;   // final fell back to the original summary
};

/// Stage 3: suggestion-conditioned retrieval and best-of-N rewriting.
class RetrievalRewriter {
public:
  RetrievalRewriter(std::shared_ptr<Gateway> filter_gateway,
                    std::shared_ptr<Gateway> rewrite_gateway,
                    const PromptLibrary* prompts, FilterConfig cfg,
                    std::uint64_t seed);

  /// Removes suggestion-irrelevant product reviews until the kept set
  /// totals strictly less than the character budget. Invalid model
  /// output is retried up to the hard threshold, then seeded random
  /// removal takes over (preferring the model's last nominations). A
  /// prompt that would blow the backend's input budget splits the set in
  /// two parts with proportional targets.
  FilterResult filter_product_reviews(const std::vector<Review>& reviews,
                                      const std::string& suggestion,
                                      const std::string& stream_key);

  /// Picks the single most relevant history review. Invalid responses
  /// retry up to history_retry; the next response's first number is then
  /// taken regardless of count; failing that, deterministic ROUGE-L
  /// ranking of history against the suggestion decides.
  HistorySelection select_history_review(const std::vector<Review>& history,
                                         const std::string& suggestion);

  /// Generates N independent rewrites, scores each with the judge, and
  /// keeps the candidate with the highest mean score (ties: lowest
  /// index). If every candidate degenerates the original summary is
  /// retained and flagged.
  RewriteOutcome rewrite_best_of(const std::string& summary,
                                 const std::string& suggestion,
                                 const std::vector<Review>& kept_reviews,
                                 const Review& selected_history,
                                 int n_candidates, const Judge& judge,
                                 const Sample& sample,
                                 TokenTally* tally = nullptr);

  const FilterConfig& config() const { return cfg_; }

private:
  struct PartOutcome {
    std::vector<std::size_t> removed;  // indices into the part
    std::vector<std::size_t> leftover_nominations;
    std::string error;
  };

  PartOutcome filter_part(const std::vector<const Review*>& part, int target,
                          const std::string& suggestion, int& retries_used,
                          int& model_calls, RngStream& rng);

  std::shared_ptr<Gateway> filter_gateway_;
  std::shared_ptr<Gateway> rewrite_gateway_;
  const PromptLibrary* prompts_;
  FilterConfig cfg_;
  std::uint64_t seed_;
};

}  // namespace rehearsal
