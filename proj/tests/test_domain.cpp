#include <doctest.h>

#include <random>

#include "rehearsal/domain.hpp"
#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

using namespace rehearsal;

namespace {

Review small_review(const std::string& id, const std::string& user,
                    const std::string& text) {
  return make_review(id, "prod-1", user, text);
}

/// Valid-by-default sample; history reviews sized so count bounds are the
/// only thing under test unless told otherwise.
Sample sample_with_history(std::size_t history_count,
                           std::size_t chars_per_review = 100) {
  Sample s;
  s.sample_id = "s1";
  s.category = Category::Clothing;
  s.product_reviews = {small_review("p1", "other-user", "product review text")};
  std::string body(chars_per_review, 'x');
  for (std::size_t i = 0; i < history_count; ++i) {
    s.history.push_back(small_review("h" + std::to_string(i), "user-1", body));
  }
  s.personalized_review = small_review("pr", "user-1", "the held out review");
  return s;
}

}  // namespace

TEST_CASE("utf8_length counts scalar values, not bytes") {
  CHECK(text::utf8_length("hello") == 5);
  CHECK(text::utf8_length("") == 0);
  CHECK(text::utf8_length("caf\xc3\xa9") == 4);          // café
  CHECK(text::utf8_length("\xe4\xbd\xa0\xe5\xa5\xbd") == 2);  // two CJK chars
}

TEST_CASE("validate_sample enforces strict history-count bounds") {
  CHECK(validate_sample(sample_with_history(6)).empty());
  CHECK(validate_sample(sample_with_history(49)).empty());

  auto low = validate_sample(sample_with_history(5));
  REQUIRE(low.size() == 1);
  CHECK(low[0] == "history count must exceed 5");

  auto high = validate_sample(sample_with_history(50));
  REQUIRE(high.size() == 1);
  CHECK(high[0] == "history count must be under 50");
}

TEST_CASE("validate_sample enforces the strict 27,000 length bound") {
  // 6 reviews, total 26,999: inside.
  Sample ok = sample_with_history(6, 4500);
  ok.history[5] = small_review("h5", "user-1", std::string(4499, 'x'));
  CHECK(validate_sample(ok).empty());

  // 49 reviews totalling exactly 27,000: rejected.
  Sample at_bound = sample_with_history(49, 551);
  at_bound.history[48] =
      small_review("h48", "user-1", std::string(27000 - 48 * 551, 'x'));
  auto violations = validate_sample(at_bound);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "history length must be under 27,000");
}

TEST_CASE("validate_sample property: count n accepted iff 5 < n < 50") {
  for (std::size_t n = 0; n <= 60; ++n) {
    Sample s = sample_with_history(n, 10);  // length never binds
    bool accepted = validate_sample(s).empty();
    bool expected = n > 5 && n < 50;
    CAPTURE(n);
    CHECK(accepted == expected);
  }
}

TEST_CASE("validate_sample flags user mismatches and text defects") {
  Sample s = sample_with_history(6);
  s.history[2].user_id = "someone-else";
  auto violations = validate_sample(s);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "history user mismatch: h2");

  Sample bad_len = sample_with_history(6);
  bad_len.product_reviews[0].char_len += 7;
  violations = validate_sample(bad_len);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "product review char_len mismatch: p1");

  Sample empty_text = sample_with_history(6);
  empty_text.personalized_review = make_review("pr", "prod-1", "user-1", "  ");
  violations = validate_sample(empty_text);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "personalized review text empty: pr");
}

TEST_CASE("EvalScores avg is the mean of present axes") {
  EvalScores e;
  e.product_ac = 90;
  e.product_sc = 80;
  e.history_ac = 70;
  e.history_sc = 60;
  e.user_ac = 50;
  e.user_sc = 40;
  e.finalize();
  CHECK(*e.avg == doctest::Approx(65.0).epsilon(1e-12));

  EvalScores partial;
  partial.product_ac = 100;
  partial.user_sc = 50;
  partial.finalize();
  CHECK(*partial.avg == doctest::Approx(75.0).epsilon(1e-12));

  EvalScores none;
  none.finalize();
  CHECK_FALSE(none.avg.has_value());
}

TEST_CASE("EvalScores avg property over random score sets") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    EvalScores e;
    std::optional<int>* slots[6] = {&e.product_ac, &e.product_sc,
                                    &e.history_ac, &e.history_sc,
                                    &e.user_ac,    &e.user_sc};
    double sum = 0;
    int n = 0;
    for (auto* slot : slots) {
      if (rng() % 3 != 0) {
        int v = static_cast<int>(rng() % 101);
        *slot = v;
        sum += v;
        ++n;
      }
    }
    e.finalize();
    if (n == 0) {
      CHECK_FALSE(e.avg.has_value());
    } else {
      CHECK(*e.avg == doctest::Approx(sum / n).epsilon(1e-9));
    }
  }
}

namespace {

RunRecord minimal_onlysum_record() {
  RunRecord r;
  r.sample_id = "s1";
  r.method = Method::OnlySum;
  r.stage = Stage::Generated;
  r.generic_summary = "a generic summary";
  r.final_summary = "a generic summary";
  r.started_at_ms = 1000;
  r.finished_at_ms = 2000;
  return r;
}

std::string random_text(std::mt19937_64& rng) {
  static const char* pieces[] = {"good", "bad",  "fit",   "price", "\n",
                                 "\"q\"", "caf\xc3\xa9", "zip",   " ",     "5x"};
  std::string out;
  std::size_t n = rng() % 8;
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng() % 10];
  return out;
}

UserTurn random_turn(std::mt19937_64& rng) {
  UserTurn t;
  t.analysis = random_text(rng);
  t.suggestions_text = random_text(rng);
  t.raw = random_text(rng);
  t.parsed = rng() % 2 == 0;
  return t;
}

RunRecord random_record(std::mt19937_64& rng) {
  RunRecord r;
  r.sample_id = "sample-" + std::to_string(rng() % 1000);
  r.method = static_cast<Method>(rng() % 5);
  r.stage = static_cast<Stage>(rng() % 6);
  if (rng() % 2) r.generic_summary = random_text(rng);
  if (rng() % 2) {
    SuggestionSession session;
    for (std::size_t i = 0; i < rng() % 3; ++i) {
      session.demos.push_back(random_turn(rng));
    }
    for (std::size_t i = 0; i < rng() % 3; ++i) {
      SupervisorVerdict v;
      v.thought = random_text(rng);
      if (rng() % 2) v.suggestion_items = {random_text(rng), random_text(rng)};
      v.passed = v.suggestion_items.empty() && rng() % 2 == 0;
      v.raw = random_text(rng);
      session.practice_attempts.push_back({random_turn(rng), v});
    }
    if (rng() % 2) session.final_suggestion = random_turn(rng);
    session.passed = rng() % 2 == 0;
    session.iterations_used = static_cast<int>(rng() % 16);
    r.session = std::move(session);
  }
  for (std::size_t i = 0; i < rng() % 3; ++i) {
    r.filtered_product_ids.push_back("rev-" + std::to_string(rng() % 50));
  }
  if (rng() % 2) r.selected_history_id = "h-" + std::to_string(rng() % 50);
  for (std::size_t i = 0; i < rng() % 3; ++i) {
    RewriteCandidate c;
    c.text = random_text(rng);
    if (rng() % 2) c.scores.product_ac = static_cast<int>(rng() % 101);
    if (rng() % 2) c.scores.user_sc = static_cast<int>(rng() % 101);
    c.scores.finalize();
    r.rewrite_candidates.push_back(std::move(c));
  }
  r.final_summary = random_text(rng);
  if (rng() % 2) r.scores.product_ac = static_cast<int>(rng() % 101);
  if (rng() % 2) r.scores.history_sc = static_cast<int>(rng() % 101);
  r.scores.finalize();
  if (rng() % 3 == 0) r.flags = {"some flag"};
  r.started_at_ms = static_cast<std::int64_t>(rng() % 1000000);
  r.finished_at_ms = r.started_at_ms + static_cast<std::int64_t>(rng() % 1000);
  r.token_totals.prompt = static_cast<std::int64_t>(rng() % 10000);
  r.token_totals.completion = static_cast<std::int64_t>(rng() % 10000);
  return r;
}

}  // namespace

TEST_CASE("run record round-trips through its line format") {
  RunRecord r = minimal_onlysum_record();
  std::string line = serialize_run(r);
  CHECK(line.find('\n') == std::string::npos);
  RunRecord back = deserialize_run(line, 1);
  CHECK(back == r);
}

TEST_CASE("run record round-trip property") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 150; ++trial) {
    RunRecord r = random_record(rng);
    RunRecord back = deserialize_run(serialize_run(r), trial + 1);
    CHECK(back == r);
  }
}

TEST_CASE("truncated line raises a parse error carrying the line number") {
  std::string line = serialize_run(minimal_onlysum_record());
  std::string truncated = line.substr(0, line.size() / 2);
  try {
    deserialize_run(truncated, 17);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line().has_value());
    CHECK(*e.line() == 17);
    CHECK(std::string(e.what()).find("line 17") != std::string::npos);
  }
}

TEST_CASE("stored avg is re-validated against the axes on load") {
  RunRecord r = minimal_onlysum_record();
  r.scores.product_ac = 90;
  r.scores.product_sc = 80;
  r.scores.history_ac = 70;
  r.scores.history_sc = 60;
  r.scores.user_ac = 50;
  r.scores.user_sc = 40;
  r.scores.finalize();
  std::string line = serialize_run(r);
  CHECK(deserialize_run(line, 1) == r);

  // Corrupt the stored average.
  std::string corrupted = line;
  std::size_t pos = corrupted.find("\"avg\":65.0");
  REQUIRE(pos != std::string::npos);
  corrupted.replace(pos, 10, "\"avg\":66.0");
  CHECK_THROWS_AS(deserialize_run(corrupted, 3), ParseError);
}

TEST_CASE("sample round-trips through its line format") {
  Sample s = sample_with_history(7);
  s.tier = Tier::HHPL;
  Sample back = deserialize_sample(serialize_sample(s), 1);
  CHECK(back == s);
}
