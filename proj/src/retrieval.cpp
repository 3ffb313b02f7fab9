#include "rehearsal/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rehearsal/errors.hpp"
#include "rehearsal/rouge.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

int removal_target(std::size_t total_chars, double avg_chars,
                   std::size_t budget) {
  if (avg_chars <= 0.0) {
    throw PreconditionError("removal_target requires avg_chars > 0");
  }
  if (total_chars <= budget) return 0;
  double excess = static_cast<double>(total_chars - budget);
  return static_cast<int>(std::ceil(excess / avg_chars));
}

namespace {

std::size_t total_chars_of(const std::vector<const Review*>& reviews) {
  std::size_t total = 0;
  for (const Review* r : reviews) total += r->char_len;
  return total;
}

std::string numbered(const std::vector<const Review*>& reviews) {
  std::vector<std::string> texts;
  texts.reserve(reviews.size());
  for (const Review* r : reviews) texts.push_back(r->text);
  return text::numbered_blocks(texts);
}

/// In-range, deduplicated nominations in response order; 1-based in,
/// 0-based out.
std::vector<std::size_t> usable_nominations(const std::vector<int>& numbers,
                                            std::size_t part_size) {
  std::vector<std::size_t> out;
  std::set<int> seen;
  for (int n : numbers) {
    if (n >= 1 && static_cast<std::size_t>(n) <= part_size &&
        seen.insert(n).second) {
      out.push_back(static_cast<std::size_t>(n - 1));
    }
  }
  return out;
}

}  // namespace

RetrievalRewriter::RetrievalRewriter(std::shared_ptr<Gateway> filter_gateway,
                                     std::shared_ptr<Gateway> rewrite_gateway,
                                     const PromptLibrary* prompts,
                                     FilterConfig cfg, std::uint64_t seed)
    : filter_gateway_(std::move(filter_gateway)),
      rewrite_gateway_(std::move(rewrite_gateway)),
      prompts_(prompts),
      cfg_(cfg),
      seed_(seed) {
  if (!filter_gateway_ || !rewrite_gateway_ || !prompts_) {
    throw ConfigError("retrieval rewriter is missing a dependency");
  }
  if (cfg_.removal_retry_soft > cfg_.removal_retry_hard) {
    throw ConfigError("removal_retry_soft must not exceed removal_retry_hard");
  }
  if (cfg_.product_char_budget == 0) {
    throw ConfigError("product_char_budget must be positive");
  }
}

RetrievalRewriter::PartOutcome RetrievalRewriter::filter_part(
    const std::vector<const Review*>& part, int target,
    const std::string& suggestion, int& retries_used, int& model_calls,
    RngStream& rng) {
  PartOutcome outcome;
  if (target <= 0) return outcome;
  target = std::min<int>(target, static_cast<int>(part.size()));

  while (retries_used < cfg_.removal_retry_hard) {
    std::string prompt =
        prompts_->render(TemplateId::ProductFilter,
                         {{"count", std::to_string(target)},
                          {"suggestion", suggestion},
                          {"reviews", numbered(part)}});
    LlmResponse resp;
    try {
      resp = filter_gateway_->complete({{Role::User, prompt}},
                                       "product_filter");
      ++model_calls;
    } catch (const GatewayError& e) {
      // Hard backend failure: record it and let seeded random removal
      // finish the job.
      ++model_calls;
      outcome.error = e.what();
      retries_used = cfg_.removal_retry_hard;
      break;
    }

    if (!resp.degenerate) {
      if (auto numbers = parse_numbers(resp.content)) {
        auto usable = usable_nominations(*numbers, part.size());
        bool valid = static_cast<int>(numbers->size()) == target &&
                     usable.size() == numbers->size();
        if (valid) {
          outcome.removed = std::move(usable);
          return outcome;
        }
        // Wrong count / out-of-range / duplicates: keep whatever signal
        // the latest nomination carries for the fallback path.
        if (!usable.empty()) outcome.leftover_nominations = std::move(usable);
      }
    }
    ++retries_used;
  }

  // Retry budget exhausted: fill the target from the last nominations,
  // then seeded random picks.
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < part.size(); ++i) pool.push_back(i);
  std::set<std::size_t> chosen;
  for (std::size_t idx : outcome.leftover_nominations) {
    if (static_cast<int>(chosen.size()) >= target) break;
    chosen.insert(idx);
  }
  while (static_cast<int>(chosen.size()) < target) {
    std::vector<std::size_t> remaining;
    for (std::size_t i : pool) {
      if (!chosen.count(i)) remaining.push_back(i);
    }
    chosen.insert(remaining[rng.index(remaining.size())]);
  }
  outcome.removed.assign(chosen.begin(), chosen.end());
  outcome.leftover_nominations.clear();
  return outcome;
}

FilterResult RetrievalRewriter::filter_product_reviews(
    const std::vector<Review>& reviews, const std::string& suggestion,
    const std::string& stream_key) {
  if (reviews.empty()) {
    throw PreconditionError("filter_product_reviews requires reviews");
  }

  FilterResult result;
  std::size_t total = 0;
  for (const Review& r : reviews) total += r.char_len;
  if (total < cfg_.product_char_budget) {
    result.kept = reviews;
    return result;
  }

  RngStream rng(seed_, "filter_fallback:" + stream_key);
  double avg = static_cast<double>(total) / reviews.size();
  int target = removal_target(total, avg, cfg_.product_char_budget);

  std::vector<const Review*> all;
  all.reserve(reviews.size());
  for (const Review& r : reviews) all.push_back(&r);

  // Split into two random halves when one extraction prompt would not fit
  // the backend's input budget; the target divides proportionally to part
  // character size (largest remainder).
  std::vector<std::vector<const Review*>> parts;
  std::vector<int> part_targets;
  std::string full_prompt =
      prompts_->render(TemplateId::ProductFilter,
                       {{"count", std::to_string(std::max(target, 1))},
                        {"suggestion", suggestion},
                        {"reviews", numbered(all)}});
  if (text::utf8_length(full_prompt) >
          filter_gateway_->config().max_input_chars &&
      reviews.size() >= 2) {
    result.split = true;
    std::vector<const Review*> shuffled = all;
    rng.shuffle(shuffled);
    std::size_t half = (shuffled.size() + 1) / 2;
    parts.emplace_back(shuffled.begin(), shuffled.begin() + half);
    parts.emplace_back(shuffled.begin() + half, shuffled.end());

    double part0_chars = static_cast<double>(total_chars_of(parts[0]));
    double share = part0_chars / static_cast<double>(total);
    int t0 = static_cast<int>(std::lround(target * share));
    t0 = std::clamp(t0, 0, target);
    part_targets = {t0, target - t0};
  } else {
    parts.push_back(all);
    part_targets.push_back(target);
  }

  std::set<const Review*> removed;
  std::vector<const Review*> preferred_leftovers;
  int retries_used = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    PartOutcome outcome = filter_part(parts[p], part_targets[p], suggestion,
                                      retries_used, result.model_calls, rng);
    for (std::size_t idx : outcome.removed) removed.insert(parts[p][idx]);
    for (std::size_t idx : outcome.leftover_nominations) {
      preferred_leftovers.push_back(parts[p][idx]);
    }
    if (!outcome.error.empty()) result.error = outcome.error;
  }
  result.retries = retries_used;
  if (retries_used >= cfg_.removal_retry_hard) {
    result.used_random_fallback = true;
  }

  std::vector<const Review*> kept;
  for (const Review* r : all) {
    if (!removed.count(r)) kept.push_back(r);
  }

  // Strict budget: "< 10,000" means an exact hit (or short removals)
  // still sheds reviews, nominated leftovers first, then seeded random.
  while (!kept.empty() && total_chars_of(kept) >= cfg_.product_char_budget) {
    const Review* victim = nullptr;
    while (!preferred_leftovers.empty() && !victim) {
      const Review* cand = preferred_leftovers.front();
      preferred_leftovers.erase(preferred_leftovers.begin());
      if (std::find(kept.begin(), kept.end(), cand) != kept.end()) {
        victim = cand;
      }
    }
    if (!victim) {
      victim = kept[rng.index(kept.size())];
      result.used_random_fallback = true;
    }
    kept.erase(std::find(kept.begin(), kept.end(), victim));
    removed.insert(victim);
  }

  for (const Review& r : reviews) {
    if (removed.count(&r)) {
      result.removed_ids.push_back(r.review_id);
    } else {
      result.kept.push_back(r);
    }
  }
  return result;
}

HistorySelection RetrievalRewriter::select_history_review(
    const std::vector<Review>& history, const std::string& suggestion) {
  if (history.empty()) {
    throw PreconditionError("select_history_review requires history");
  }

  std::vector<std::string> texts;
  texts.reserve(history.size());
  for (const Review& r : history) texts.push_back(r.text);
  std::string prompt =
      prompts_->render(TemplateId::HistoryFilter,
                       {{"suggestion", suggestion},
                        {"reviews", text::numbered_blocks(texts)}});

  HistorySelection selection{history.front()};

  auto ask = [&]() -> std::optional<std::vector<int>> {
    ++selection.model_calls;
    try {
      LlmResponse resp =
          filter_gateway_->complete({{Role::User, prompt}}, "history_filter");
      if (resp.degenerate) return std::nullopt;
      return parse_numbers(resp.content);
    } catch (const GatewayError&) {
      return std::nullopt;  // hard failures fall through to ROUGE-L ranking
    }
  };

  for (int retry = 0; retry < cfg_.history_retry; ++retry) {
    auto numbers = ask();
    if (numbers && numbers->size() == 1 && (*numbers)[0] >= 1 &&
        static_cast<std::size_t>((*numbers)[0]) <= history.size()) {
      selection.review = history[(*numbers)[0] - 1];
      return selection;
    }
  }

  // Retry budget spent: take the first number of the next set, whatever
  // its count.
  auto numbers = ask();
  if (numbers && !numbers->empty() && (*numbers)[0] >= 1 &&
      static_cast<std::size_t>((*numbers)[0]) <= history.size()) {
    selection.review = history[(*numbers)[0] - 1];
    return selection;
  }

  // Deterministic fallback: ROUGE-L of each history review against the
  // suggestion, highest F1 wins, ties to the lowest index.
  rouge::TokenSeq sug = rouge::tokenize(suggestion);
  std::size_t best = 0;
  double best_f1 = -1.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    double f1 = rouge::rouge_l(rouge::tokenize(history[i].text), sug).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = i;
    }
  }
  selection.review = history[best];
  selection.used_rouge_fallback = true;
  return selection;
}

RewriteOutcome RetrievalRewriter::rewrite_best_of(
    const std::string& summary, const std::string& suggestion,
    const std::vector<Review>& kept_reviews, const Review& selected_history,
    int n_candidates, const Judge& judge, const Sample& sample,
    TokenTally* tally) {
  if (summary == kDegenerateContent) {
    throw PreconditionError("rewrite_best_of requires a non-degenerate summary");
  }
  if (n_candidates < 1) {
    throw PreconditionError("rewrite_best_of requires n_candidates >= 1");
  }

  std::vector<std::string> texts;
  texts.reserve(kept_reviews.size());
  for (const Review& r : kept_reviews) texts.push_back(r.text);
  std::string prompt =
      prompts_->render(TemplateId::Rewrite,
                       {{"summary", summary},
                        {"suggestion", suggestion},
                        {"reviews", text::numbered_blocks(texts)},
                        {"history_review", selected_history.text}});

  std::vector<BatchItem> batch(
      static_cast<std::size_t>(n_candidates),
      BatchItem{{{Role::User, prompt}}, "rewrite"});
  std::vector<CallOutcome> outcomes = rewrite_gateway_->complete_many(batch);

  RewriteOutcome result;
  for (const CallOutcome& o : outcomes) {
    RewriteCandidate cand;
    if (o.ok()) {
      if (tally) tally->add(*o.response);
      cand.text = o.response->content;
    } else {
      cand.text = kDegenerateContent;
    }
    cand.scores = judge.score_summary(cand.text, sample, tally);
    result.candidates.push_back(std::move(cand));
  }

  double best_key = -1.0;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const RewriteCandidate& c = result.candidates[i];
    if (c.text == kDegenerateContent) continue;
    double key = c.scores.avg.value_or(-0.5);
    if (key > best_key) {
      best_key = key;
      result.winning_index = static_cast<int>(i);
    }
  }

  if (result.winning_index < 0) {
    result.final_text = summary;
    result.degraded = true;
  } else {
    result.final_text = result.candidates[result.winning_index].text;
  }
  return result;
}

}  // namespace rehearsal
