#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "rehearsal/dataset.hpp"
#include "rehearsal/rouge.hpp"
#include "rehearsal/scripted_backend.hpp"
#include "rehearsal/text.hpp"

using namespace rehearsal;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

RawReview raw(const std::string& user, const std::string& product,
              const std::string& text,
              Category category = Category::Clothing) {
  return RawReview{user, product, text, category};
}

}  // namespace

TEST_CASE("ingestion reads mapped fields and skips malformed lines") {
  auto path = write_temp("rehearsal_corpus_test.jsonl",
                         R"({"reviewerID": "u1", "asin": "p1", "reviewText": "nice fit", "category": "Clothing"})"
                         "\n"
                         "this line is not json\n"
                         R"({"reviewerID": "u2", "asin": "p1", "category": "Clothing"})"
                         "\n"
                         R"({"reviewerID": "u3", "asin": "p2", "reviewText": "ok", "category": "Basketry"})"
                         "\n"
                         R"({"reviewerID": "u4", "asin": "p2", "reviewText": "good sound", "category": "Electronics"})"
                         "\n");
  IngestStats stats;
  auto reviews = ingest_reviews(path, FieldMap{}, &stats);
  REQUIRE(reviews.size() == 2);
  CHECK(reviews[0].user_id == "u1");
  CHECK(reviews[0].category == Category::Clothing);
  CHECK(reviews[1].category == Category::Electronics);
  CHECK(stats.lines_read == 5);
  CHECK(stats.skipped == 3);
  CHECK(stats.warnings.size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("ingestion accepts the full Amazon category names") {
  auto path = write_temp("rehearsal_corpus_cats.jsonl",
                         R"({"reviewerID": "u1", "asin": "p1", "reviewText": "x", "category": "Clothing, Shoes and Jewelry"})"
                         "\n"
                         R"({"reviewerID": "u2", "asin": "p2", "reviewText": "y", "category": "Home and Kitchen"})"
                         "\n");
  auto reviews = ingest_reviews(path, FieldMap{});
  REQUIRE(reviews.size() == 2);
  CHECK(reviews[0].category == Category::Clothing);
  CHECK(reviews[1].category == Category::Home);
  std::filesystem::remove(path);
}

TEST_CASE("candidate assembly holds out the user review") {
  std::vector<RawReview> corpus = {
      raw("u1", "p1", "u1 review of p1"),
      raw("u1", "p2", "u1 review of p2"),
      raw("u1", "p3", "u1 review of p3"),
      raw("u2", "p1", "u2 review of p1"),
      raw("u3", "p1", "u3 review of p1"),
  };
  auto candidates = assemble_candidates(corpus);

  const Sample* s = nullptr;
  for (const Sample& c : candidates) {
    if (c.sample_id == "Clothing:p1:u1") s = &c;
  }
  REQUIRE(s != nullptr);
  CHECK(s->personalized_review.text == "u1 review of p1");
  // History: the user's other reviews; never the held-out one.
  REQUIRE(s->history.size() == 2);
  for (const Review& r : s->history) {
    CHECK(r.user_id == "u1");
    CHECK(r.text != "u1 review of p1");
  }
  // Product set: other users only.
  REQUIRE(s->product_reviews.size() == 2);
  for (const Review& r : s->product_reviews) CHECK(r.user_id != "u1");

  // u2 has no other reviews -> candidate exists with empty history
  // (round 1 will reject it), and p2/p3 have no other-user reviews ->
  // those candidates are dropped outright.
  for (const Sample& c : candidates) {
    CHECK(c.sample_id.find(":p2:") == std::string::npos);
    CHECK(c.sample_id.find(":p3:") == std::string::npos);
  }
}

TEST_CASE("categories never mix in assembly") {
  std::vector<RawReview> corpus = {
      raw("u1", "p1", "clothing review"),
      raw("u1", "p9", "electronics review", Category::Electronics),
      raw("u2", "p1", "other user clothing"),
  };
  auto candidates = assemble_candidates(corpus);
  for (const Sample& c : candidates) {
    for (const Review& r : c.history) {
      CHECK(r.text != "electronics review");
    }
  }
}

namespace {

Sample bounds_sample(std::size_t history_count, std::size_t chars_each) {
  std::vector<RawReview> corpus;
  corpus.push_back(raw("u1", "p1", "the held out review text"));
  corpus.push_back(raw("u2", "p1", "another user review"));
  for (std::size_t i = 0; i < history_count; ++i) {
    corpus.push_back(
        raw("u1", "q" + std::to_string(i), std::string(chars_each, 'x')));
  }
  auto candidates = assemble_candidates(corpus);
  for (const Sample& c : candidates) {
    if (c.sample_id == "Clothing:p1:u1") return c;
  }
  FAIL("candidate not assembled");
  return {};
}

}  // namespace

TEST_CASE("round 1 enforces the strict bounds") {
  CHECK(filter_round1({bounds_sample(6, 100)}).size() == 1);
  CHECK(filter_round1({bounds_sample(5, 100)}).empty());
  CHECK(filter_round1({bounds_sample(49, 100)}).size() == 1);
  CHECK(filter_round1({bounds_sample(50, 100)}).empty());
  // 10 reviews x 2,750 chars = 27,500: over the length bound.
  CHECK(filter_round1({bounds_sample(10, 2750)}).empty());
  // 6 x 4,499 = 26,994: under.
  CHECK(filter_round1({bounds_sample(6, 4499)}).size() == 1);
}

TEST_CASE("round 2 keeps near-copies and drops disjoint reviews") {
  Sample copy = bounds_sample(6, 50);
  copy.personalized_review =
      make_review("pr", "p1", "u1", copy.history[0].text);
  CHECK(filter_round2({copy}).size() == 1);

  Sample disjoint = bounds_sample(6, 50);
  disjoint.personalized_review =
      make_review("pr", "p1", "u1", "zq zw ze zr zt zy");
  CHECK(filter_round2({disjoint}).empty());
}

TEST_CASE("round 2 thresholds at 0.45 via oracle-engineered samples") {
  // History (6 reviews) and the product review jointly carry 20 distinct
  // ref tokens; the candidate shares k of them, junk-padded so only
  // unigram/LCS overlap exists. Searching (k, junk) with the oracle finds
  // sums bracketing the threshold.
  auto build = [](int shared, int junk) {
    Sample s;
    s.sample_id = "engineered";
    int w = 0;
    for (int h = 0; h < 6; ++h) {
      std::string text;
      for (int i = 0; i < 3; ++i) text += "w" + std::to_string(w++) + " ";
      s.history.push_back(
          make_review("h" + std::to_string(h), "p1", "u1", text));
    }
    s.product_reviews.push_back(
        make_review("p", "p1", "u2", "w18 w19"));
    std::string cand;
    for (int i = 0; i < shared; ++i) {
      cand += "w" + std::to_string(i) + " j" + std::to_string(i) + " ";
    }
    for (int i = shared; i < shared + junk; ++i) {
      cand += "j" + std::to_string(i) + " ";
    }
    s.personalized_review = make_review("pr", "p1", "u1", cand);
    return s;
  };

  auto oracle_sum = [](const Sample& s) {
    std::vector<std::string> refs;
    for (const Review& r : s.history) refs.push_back(r.text);
    for (const Review& r : s.product_reviews) refs.push_back(r.text);
    auto c = rouge::tokenize(s.personalized_review.text).tokens;
    auto r = rouge::tokenize(text::join(refs, "\n\n")).tokens;
    return oracle::rouge_n(c, r, 1).f1 + oracle::rouge_n(c, r, 2).f1 +
           oracle::rouge_l(c, r).f1;
  };

  std::optional<Sample> dropped, kept;
  double dropped_sum = 0, kept_sum = 0;
  for (int shared = 3; shared <= 12 && (!dropped || !kept); ++shared) {
    for (int junk = 0; junk <= 30 && (!dropped || !kept); ++junk) {
      Sample s = build(shared, junk);
      double sum = oracle_sum(s);
      if (!dropped && sum >= 0.43 && sum < 0.4499) {
        dropped = s;
        dropped_sum = sum;
      }
      if (!kept && sum > 0.4501 && sum <= 0.47) {
        kept = s;
        kept_sum = sum;
      }
    }
  }
  REQUIRE(dropped.has_value());
  REQUIRE(kept.has_value());
  CAPTURE(dropped_sum);
  CAPTURE(kept_sum);
  CHECK(filter_round2({*dropped}).empty());
  CHECK(filter_round2({*kept}).size() == 1);
}

TEST_CASE("tier classification follows the 1-5 thresholds") {
  CHECK(classify_tier(4.5, 4.2, 4.6) == Tier::HighHigh);
  CHECK(classify_tier(2.8, 3.0, 4.4) == Tier::HHPL);
  CHECK(classify_tier(2.0, 2.0, 3.0) == Tier::LowLow);
  // Boundary: "higher than 4" is strict, 4.0 is not high.
  CHECK(classify_tier(4.0, 4.5, 4.5) == Tier::Unlabeled);
  CHECK(classify_tier(5.0, 5.0, 4.0) == Tier::Unlabeled);
  // 3.5 sits between the bars.
  CHECK(classify_tier(3.5, 3.5, 3.5) == Tier::Unlabeled);
  CHECK(classify_tier(3.0, 3.0, 5.0) == Tier::HHPL);
}

TEST_CASE("default tier targets match the published analysis") {
  TierCounts counts = default_tier_counts();
  CHECK(counts[Category::Clothing].high == 100);
  CHECK(counts[Category::Clothing].low == 50);
  CHECK(counts[Category::Clothing].hhpl == 46);
  CHECK(counts[Category::Electronics].hhpl == 52);
  CHECK(counts[Category::Home].low == 32);
  CHECK(counts[Category::Health].hhpl == 14);
}

namespace {

/// Judge backend keyed on markers: the summary (personalized review)
/// carries tier=HH/LL/PL and the references carry marker-hist/marker-prod.
std::shared_ptr<ScriptedBackend> tier_judge_backend() {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.contains = "tier=HH;", .responses = {"<score>5</score>"}});
  backend->add_rule({.contains = "tier=LL;", .responses = {"<score>2</score>"}});
  backend->add_rule({.tag = "judge_ac",
                     .contains = "tier=PL;",
                     .contains_all = {"marker-hist"},
                     .responses = {"<score>5</score>"}});
  backend->add_rule({.contains = "tier=PL;", .responses = {"<score>2</score>"}});
  backend->add_rule({.contains = "tier=XX;", .responses = {"<score>4</score>"}});
  return backend;
}

Judge tier_judge(std::shared_ptr<ScriptedBackend> backend,
                 const PromptLibrary& prompts) {
  BackendConfig cfg;
  cfg.model_name = "scripted";
  cfg.backoff_base = std::chrono::milliseconds(0);
  return Judge(std::make_shared<Gateway>(backend, cfg), &prompts,
               JudgeConfig{JudgeScale::OneToFive, 3});
}

Sample marked_sample(const std::string& id, const std::string& marker,
                     Category category = Category::Clothing) {
  Sample s;
  s.sample_id = id;
  s.category = category;
  s.product_reviews = {make_review(id + "-p", "p1", "u2",
                                   "marker-prod product text")};
  for (int i = 0; i < 6; ++i) {
    s.history.push_back(make_review(id + "-h" + std::to_string(i), "q", "u1",
                                    "marker-hist history text"));
  }
  s.personalized_review =
      make_review(id + "-pr", "p1", "u1", marker + " held out review");
  return s;
}

}  // namespace

TEST_CASE("tier_sample classifies, draws, and reports shortfalls") {
  std::vector<Sample> survivors;
  for (int i = 0; i < 5; ++i) {
    survivors.push_back(
        marked_sample("hh" + std::to_string(i), "tier=HH;"));
  }
  survivors.push_back(marked_sample("ll0", "tier=LL;"));
  survivors.push_back(marked_sample("pl0", "tier=PL;"));
  survivors.push_back(marked_sample("pl1", "tier=PL;"));
  survivors.push_back(marked_sample("mid", "tier=XX;"));  // between tiers

  PromptLibrary prompts;
  auto backend = tier_judge_backend();
  Judge judge = tier_judge(backend, prompts);

  TierCounts counts{{Category::Clothing, {3, 5, 1}}};
  TierSampleResult result = tier_sample(survivors, judge, counts, 42);

  CHECK(result.counts["Clothing"]["high_high"] == 3);
  CHECK(result.counts["Clothing"]["low_low"] == 1);
  CHECK(result.counts["Clothing"]["hhpl"] == 1);
  CHECK(result.selected.size() == 5);
  for (const Sample& s : result.selected) CHECK(s.tier != Tier::Unlabeled);

  // Low tier wanted 5, pool had 1.
  REQUIRE(result.shortfalls.size() == 1);
  CHECK(result.shortfalls[0] == "Clothing low_low: wanted 5, got 1");

  // The between-tiers sample is excluded, not mislabeled.
  REQUIRE(result.excluded.size() == 1);
  CHECK(result.excluded[0] == "mid: between tiers");

  // 3 axis calls per survivor.
  CHECK(backend->call_count() == survivors.size() * 3);
}

TEST_CASE("tier_sample is deterministic under a fixed seed") {
  std::vector<Sample> survivors;
  for (int i = 0; i < 12; ++i) {
    survivors.push_back(marked_sample("hh" + std::to_string(i), "tier=HH;"));
  }
  PromptLibrary prompts;
  TierCounts counts{{Category::Clothing, {4, 0, 0}}};

  auto run = [&](std::uint64_t seed) {
    Judge judge = tier_judge(tier_judge_backend(), prompts);
    std::vector<std::string> ids;
    for (const Sample& s : tier_sample(survivors, judge, counts, seed).selected) {
      ids.push_back(s.sample_id);
    }
    return ids;
  };

  auto first = run(42);
  CHECK(first == run(42));
  CHECK(first != run(43));  // a different seed draws differently
  CHECK(first.size() == 4);
}
