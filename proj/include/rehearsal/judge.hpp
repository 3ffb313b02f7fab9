#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rehearsal/domain.hpp"
#include "rehearsal/gateway.hpp"
#include "rehearsal/prompts.hpp"

namespace rehearsal {

struct JudgeConfig {
  JudgeScale scale = JudgeScale::ZeroToHundred;
  int parse_retries = 3;
};

/// Finds all <score>N</score> tags and returns the last one whose integer
/// value lies in the scale's range ([1,5] or [0,100]). Non-integer or
/// out-of-range tags are skipped; no usable tag means no score. Never
/// returns an out-of-range value.
std::optional<int> extract_score_tag(const std::string& raw, JudgeScale scale);

/// LLM-based evaluation harness: aspect coverage (AC) and sentiment
/// consistency (SC) on either the 1-5 or the rescaled 0-100 prompts.
class Judge {
public:
  Judge(std::shared_ptr<Gateway> gateway, const PromptLibrary* prompts,
        JudgeConfig cfg);

  /// One metric against one reference set. Parse failures are retried as
  /// fresh calls up to parse_retries; a persistent failure yields a
  /// missing score, never a fabricated one. Degenerate ("None") backend
  /// responses are missing immediately.
  std::optional<int> score_axis(const std::string& summary,
                                const std::vector<std::string>& references,
                                JudgeMetric metric,
                                TokenTally* tally = nullptr) const;

  /// Six axes: (product reviews, history, personalized review) x (AC, SC).
  /// A "None" summary scores nothing and makes no calls.
  EvalScores score_summary(const std::string& summary, const Sample& sample,
                           TokenTally* tally = nullptr) const;

  const JudgeConfig& config() const { return cfg_; }
  Gateway& gateway() const { return *gateway_; }

private:
  std::shared_ptr<Gateway> gateway_;
  const PromptLibrary* prompts_;
  JudgeConfig cfg_;
};

}  // namespace rehearsal
