#include "rehearsal/judge.hpp"

#include <cctype>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

namespace {

constexpr std::string_view kOpenTag = "<score>";
constexpr std::string_view kCloseTag = "</score>";

std::optional<int> parse_tag_value(std::string_view inner, JudgeScale scale) {
  inner = text::trim(inner);
  if (inner.empty()) return std::nullopt;
  long value = 0;
  for (char c : inner) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
    if (value > 10000) return std::nullopt;
  }
  int lo = scale == JudgeScale::OneToFive ? 1 : 0;
  int hi = scale == JudgeScale::OneToFive ? 5 : 100;
  if (value < lo || value > hi) return std::nullopt;
  return static_cast<int>(value);
}

}  // namespace

std::optional<int> extract_score_tag(const std::string& raw,
                                     JudgeScale scale) {
  std::optional<int> last;
  std::size_t pos = 0;
  while ((pos = raw.find(kOpenTag, pos)) != std::string::npos) {
    std::size_t inner = pos + kOpenTag.size();
    std::size_t close = raw.find(kCloseTag, inner);
    if (close == std::string::npos) break;
    if (auto value = parse_tag_value(
            std::string_view(raw).substr(inner, close - inner), scale)) {
      last = value;
    }
    pos = close + kCloseTag.size();
  }
  return last;
}

Judge::Judge(std::shared_ptr<Gateway> gateway, const PromptLibrary* prompts,
             JudgeConfig cfg)
    : gateway_(std::move(gateway)), prompts_(prompts), cfg_(cfg) {
  if (!gateway_) throw ConfigError("judge requires a gateway");
  if (!prompts_) throw ConfigError("judge requires a prompt library");
}

std::optional<int> Judge::score_axis(const std::string& summary,
                                     const std::vector<std::string>& references,
                                     JudgeMetric metric,
                                     TokenTally* tally) const {
  if (summary.empty() || references.empty()) {
    throw PreconditionError("score_axis requires a summary and references");
  }

  std::string prompt = prompts_->render_judge(
      metric, cfg_.scale,
      {{"reviews", text::numbered_blocks(references)}, {"summary", summary}});
  std::string tag = metric == JudgeMetric::AC ? "judge_ac" : "judge_sc";

  for (int attempt = 0; attempt <= cfg_.parse_retries; ++attempt) {
    LlmResponse resp = gateway_->complete({{Role::User, prompt}}, tag);
    if (tally) tally->add(resp);
    if (resp.degenerate) return std::nullopt;  // retrying cannot help
    if (auto score = extract_score_tag(resp.content, cfg_.scale)) {
      return score;
    }
  }
  return std::nullopt;
}

EvalScores Judge::score_summary(const std::string& summary,
                                const Sample& sample, TokenTally* tally) const {
  EvalScores scores;
  if (summary == kDegenerateContent) {
    return scores;  // all axes missing, avg missing
  }

  std::vector<std::string> product;
  product.reserve(sample.product_reviews.size());
  for (const Review& r : sample.product_reviews) product.push_back(r.text);
  std::vector<std::string> history;
  history.reserve(sample.history.size());
  for (const Review& r : sample.history) history.push_back(r.text);
  std::vector<std::string> user = {sample.personalized_review.text};

  scores.product_ac = score_axis(summary, product, JudgeMetric::AC, tally);
  scores.product_sc = score_axis(summary, product, JudgeMetric::SC, tally);
  scores.history_ac = score_axis(summary, history, JudgeMetric::AC, tally);
  scores.history_sc = score_axis(summary, history, JudgeMetric::SC, tally);
  scores.user_ac = score_axis(summary, user, JudgeMetric::AC, tally);
  scores.user_sc = score_axis(summary, user, JudgeMetric::SC, tally);
  scores.finalize();
  return scores;
}

}  // namespace rehearsal
