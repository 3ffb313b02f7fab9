#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rehearsal::rouge {

/// Lowercased word tokens. No stemming, no stopword removal.
struct TokenSeq {
  std::vector<std::string> tokens;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }

  bool operator==(const TokenSeq&) const = default;
};

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Lowercase, split on ASCII non-alphanumeric runs; digits kept.
/// Non-ASCII bytes are treated as token characters so UTF-8 words
/// survive intact.
TokenSeq tokenize(std::string_view text);

/// Clipped n-gram overlap, n in {1,2}. Empty n-gram sets score zero.
RougeScore rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n);

/// LCS-based score with O(|cand|*|ref|) row-rolling DP.
RougeScore rouge_l(const TokenSeq& cand, const TokenSeq& ref);

/// ROUGE-1 + ROUGE-2 + ROUGE-L F1 of `cand` against the refs joined into
/// one reference text with blank-line separators. This is the quantity
/// the dataset builder thresholds at 0.45.
double rouge_sum_against(const std::string& cand,
                         const std::vector<std::string>& refs);

}  // namespace rehearsal::rouge
