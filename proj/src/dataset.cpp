#include "rehearsal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "rehearsal/errors.hpp"
#include "rehearsal/rng.hpp"
#include "rehearsal/rouge.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

using nlohmann::json;

std::vector<RawReview> ingest_reviews(const std::filesystem::path& path,
                                      const FieldMap& fields,
                                      IngestStats* stats) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read corpus file: " + path.string());

  std::vector<RawReview> reviews;
  std::string line;
  std::size_t line_number = 0;
  auto warn = [&](const std::string& why) {
    if (stats) {
      ++stats->skipped;
      stats->warnings.push_back(path.filename().string() + ":" +
                                std::to_string(line_number) + ": " + why);
    }
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (stats) ++stats->lines_read;
    if (text::trim(line).empty()) {
      if (stats) --stats->lines_read;
      continue;
    }
    json j = json::parse(line, nullptr, false);
    if (!j.is_object()) {
      warn("malformed JSON");
      continue;
    }
    RawReview r;
    if (!j.contains(fields.reviewer) || !j.contains(fields.product) ||
        !j.contains(fields.text) || !j.contains(fields.category)) {
      warn("missing field");
      continue;
    }
    try {
      r.user_id = j.at(fields.reviewer).get<std::string>();
      r.product_id = j.at(fields.product).get<std::string>();
      r.text = j.at(fields.text).get<std::string>();
      auto cat = category_from_string(j.at(fields.category).get<std::string>());
      if (!cat) {
        warn("unknown category");
        continue;
      }
      r.category = *cat;
    } catch (const json::exception&) {
      warn("field type mismatch");
      continue;
    }
    if (text::trim(r.text).empty()) {
      warn("empty review text");
      continue;
    }
    reviews.push_back(std::move(r));
  }
  return reviews;
}

std::vector<Sample> assemble_candidates(const std::vector<RawReview>& raw) {
  // Group indices by (category, product) and (category, user); keys are
  // sorted so candidate order is independent of input hashing.
  std::map<std::pair<Category, std::string>, std::vector<std::size_t>>
      by_product;
  std::map<std::pair<Category, std::string>, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    by_product[{raw[i].category, raw[i].product_id}].push_back(i);
    by_user[{raw[i].category, raw[i].user_id}].push_back(i);
  }

  auto review_of = [&](std::size_t i) {
    const RawReview& r = raw[i];
    return make_review(r.user_id + "/" + r.product_id + "/" +
                           std::to_string(i),
                       r.product_id, r.user_id, r.text);
  };

  std::vector<Sample> candidates;
  std::set<std::string> seen_ids;
  for (const auto& [key, indices] : by_user) {
    const auto& [category, user_id] = key;
    for (std::size_t held_out : indices) {
      Sample s;
      s.category = category;
      s.sample_id = to_string(category) + ":" + raw[held_out].product_id +
                    ":" + user_id;
      // A user reviewing the same product twice would collide; keep the
      // first occurrence.
      if (!seen_ids.insert(s.sample_id).second) continue;
      s.personalized_review = review_of(held_out);

      for (std::size_t i : indices) {
        if (i != held_out) s.history.push_back(review_of(i));
      }
      for (std::size_t i :
           by_product.at({category, raw[held_out].product_id})) {
        if (raw[i].user_id != user_id) s.product_reviews.push_back(review_of(i));
      }
      if (s.product_reviews.empty()) continue;
      candidates.push_back(std::move(s));
    }
  }
  return candidates;
}

std::vector<Sample> filter_round1(const std::vector<Sample>& candidates) {
  std::vector<Sample> survivors;
  for (const Sample& s : candidates) {
    if (validate_sample(s).empty()) survivors.push_back(s);
  }
  return survivors;
}

std::vector<Sample> filter_round2(const std::vector<Sample>& survivors) {
  std::vector<Sample> kept;
  for (const Sample& s : survivors) {
    std::vector<std::string> refs;
    refs.reserve(s.history.size() + s.product_reviews.size());
    for (const Review& r : s.history) refs.push_back(r.text);
    for (const Review& r : s.product_reviews) refs.push_back(r.text);
    if (rouge::rouge_sum_against(s.personalized_review.text, refs) >=
        kRougeSumThreshold) {
      kept.push_back(s);
    }
  }
  return kept;
}

Tier classify_tier(double product_ac, double product_sc, double history_ac) {
  bool product_high = product_ac > 4.0 && product_sc > 4.0;
  bool product_low = product_ac <= 3.0 && product_sc <= 3.0;
  bool history_high = history_ac > 4.0;
  bool history_low = history_ac <= 3.0;

  if (product_high && history_high) return Tier::HighHigh;
  if (product_low && history_low) return Tier::LowLow;
  if (history_high && product_low) return Tier::HHPL;
  return Tier::Unlabeled;
}

TierCounts default_tier_counts() {
  return TierCounts{{Category::Clothing, {100, 50, 46}},
                    {Category::Electronics, {100, 24, 52}},
                    {Category::Home, {100, 32, 27}},
                    {Category::Health, {100, 21, 14}}};
}

TierSampleResult tier_sample(const std::vector<Sample>& survivors,
                             const Judge& judge, const TierCounts& counts,
                             std::uint64_t seed) {
  TierSampleResult result;

  // Pools keyed by (category, tier); survivor order preserved within.
  std::map<Category, std::map<Tier, std::vector<Sample>>> pools;
  for (const Sample& s : survivors) {
    std::vector<std::string> product;
    for (const Review& r : s.product_reviews) product.push_back(r.text);
    std::vector<std::string> history;
    for (const Review& r : s.history) history.push_back(r.text);
    const std::string& personalized = s.personalized_review.text;

    auto product_ac = judge.score_axis(personalized, product, JudgeMetric::AC);
    auto product_sc = judge.score_axis(personalized, product, JudgeMetric::SC);
    // Personalized sentiment need not match the history's overall
    // sentiment, so the history side is aspect coverage only.
    auto history_ac = judge.score_axis(personalized, history, JudgeMetric::AC);
    if (!product_ac || !product_sc || !history_ac) {
      result.excluded.push_back(s.sample_id + ": judge score unavailable");
      continue;
    }

    Tier tier = classify_tier(*product_ac, *product_sc, *history_ac);
    if (tier == Tier::Unlabeled) {
      result.excluded.push_back(s.sample_id + ": between tiers");
      continue;
    }
    Sample labeled = s;
    labeled.tier = tier;
    pools[s.category][tier].push_back(std::move(labeled));
  }

  auto take = [&](std::vector<Sample>& pool, int want, Category category,
                  Tier tier, bool random_draw) {
    if (want <= 0) return;
    if (random_draw) {
      RngStream rng(seed, "tier_sample:" + to_string(category));
      rng.shuffle(pool);
    }
    int got = std::min<int>(want, static_cast<int>(pool.size()));
    for (int i = 0; i < got; ++i) result.selected.push_back(pool[i]);
    result.counts[to_string(category)][to_string(tier)] = got;
    if (got < want) {
      result.shortfalls.push_back(to_string(category) + " " + to_string(tier) +
                                  ": wanted " + std::to_string(want) +
                                  ", got " + std::to_string(got));
    }
  };

  for (const auto& [category, targets] : counts) {
    auto& tiers = pools[category];
    take(tiers[Tier::HighHigh], targets.high, category, Tier::HighHigh, true);
    take(tiers[Tier::LowLow], targets.low, category, Tier::LowLow, false);
    take(tiers[Tier::HHPL], targets.hhpl, category, Tier::HHPL, false);
  }
  return result;
}

}  // namespace rehearsal
