#include "rehearsal/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal::rouge {

namespace {

bool is_token_char(unsigned char c) {
  return c >= 0x80 || std::isalnum(c);
}

double f1_of(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::unordered_map<std::string, int> ngram_counts(const TokenSeq& seq, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::string key = seq.tokens[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += seq.tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a.tokens[i - 1] == b.tokens[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  std::string token;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      token += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!token.empty()) {
      seq.tokens.push_back(std::move(token));
      token.clear();
    }
  }
  if (!token.empty()) seq.tokens.push_back(std::move(token));
  return seq;
}

RougeScore rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n) {
  if (n != 1 && n != 2) {
    throw PreconditionError("rouge_n supports n in {1,2}");
  }
  auto cand_counts = ngram_counts(cand, n);
  auto ref_counts = ngram_counts(ref, n);

  std::size_t cand_total = 0;
  for (const auto& [_, c] : cand_counts) cand_total += c;
  std::size_t ref_total = 0;
  for (const auto& [_, c] : ref_counts) ref_total += c;
  if (cand_total == 0 || ref_total == 0) return {};

  std::size_t clip = 0;
  for (const auto& [gram, c] : cand_counts) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) {
      clip += std::min(c, it->second);
    }
  }

  RougeScore s;
  s.precision = static_cast<double>(clip) / cand_total;
  s.recall = static_cast<double>(clip) / ref_total;
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

RougeScore rouge_l(const TokenSeq& cand, const TokenSeq& ref) {
  if (cand.empty() || ref.empty()) return {};
  std::size_t lcs = lcs_length(cand, ref);
  RougeScore s;
  s.precision = static_cast<double>(lcs) / cand.size();
  s.recall = static_cast<double>(lcs) / ref.size();
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

double rouge_sum_against(const std::string& cand,
                         const std::vector<std::string>& refs) {
  if (refs.empty()) {
    throw PreconditionError("rouge_sum_against needs at least one reference");
  }
  std::string joined = text::join(refs, "\n\n");
  TokenSeq c = tokenize(cand);
  TokenSeq r = tokenize(joined);
  return rouge_n(c, r, 1).f1 + rouge_n(c, r, 2).f1 + rouge_l(c, r).f1;
}

}  // namespace rehearsal::rouge
