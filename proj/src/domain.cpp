#include "rehearsal/domain.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

using nlohmann::json;

Review make_review(std::string review_id, std::string product_id,
                   std::string user_id, std::string text) {
  Review r;
  r.review_id = std::move(review_id);
  r.product_id = std::move(product_id);
  r.user_id = std::move(user_id);
  r.char_len = text::utf8_length(text);
  r.text = std::move(text);
  return r;
}

namespace {

void check_review(const Review& r, const std::string& where,
                  std::vector<std::string>& out) {
  if (r.char_len != text::utf8_length(r.text)) {
    out.push_back(where + " char_len mismatch: " + r.review_id);
  }
  if (text::trim(r.text).empty()) {
    out.push_back(where + " text empty: " + r.review_id);
  }
}

}  // namespace

std::vector<std::string> validate_sample(const Sample& s) {
  std::vector<std::string> violations;

  if (s.history.size() <= kHistoryCountMinExclusive) {
    violations.push_back("history count must exceed 5");
  }
  if (s.history.size() >= kHistoryCountMaxExclusive) {
    violations.push_back("history count must be under 50");
  }

  std::size_t total = 0;
  for (const Review& r : s.history) total += r.char_len;
  if (total >= kHistoryCharsMaxExclusive) {
    violations.push_back("history length must be under 27,000");
  }

  if (!s.personalized_review.user_id.empty()) {
    for (const Review& r : s.history) {
      if (!r.user_id.empty() && r.user_id != s.personalized_review.user_id) {
        violations.push_back("history user mismatch: " + r.review_id);
      }
    }
  }

  for (const Review& r : s.product_reviews) {
    check_review(r, "product review", violations);
  }
  for (const Review& r : s.history) {
    check_review(r, "history review", violations);
  }
  check_review(s.personalized_review, "personalized review", violations);

  return violations;
}

std::string SupervisorVerdict::recommendations_payload() const {
  if (!suggestion_items.empty()) {
    return text::join(suggestion_items, "\n");
  }
  return raw;
}

int EvalScores::present_count() const {
  int n = 0;
  for (const auto* a : axes()) {
    if (a->has_value()) ++n;
  }
  return n;
}

std::optional<double> EvalScores::recompute_avg() const {
  int n = 0;
  double sum = 0;
  for (const auto* a : axes()) {
    if (a->has_value()) {
      sum += **a;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// ── Enum names ──────────────────────────────────────────────────

std::string to_string(Method m) {
  switch (m) {
    case Method::Rehearsal: return "rehearsal";
    case Method::PerSum: return "persum";
    case Method::AnaPerSum: return "ana_persum";
    case Method::OnlySum: return "onlysum";
    case Method::SumPerChan: return "sum_perchan";
  }
  return "unknown";
}

std::string display_name(Method m) {
  switch (m) {
    case Method::Rehearsal: return "Rehearsal";
    case Method::PerSum: return "PerSum";
    case Method::AnaPerSum: return "Ana+PerSum";
    case Method::OnlySum: return "OnlySum";
    case Method::SumPerChan: return "Sum+PerChan";
  }
  return "unknown";
}

std::optional<Method> method_from_string(const std::string& s) {
  std::string k = text::lower_ascii(s);
  if (k == "rehearsal") return Method::Rehearsal;
  if (k == "persum") return Method::PerSum;
  if (k == "ana_persum" || k == "ana+persum" || k == "anapersum") {
    return Method::AnaPerSum;
  }
  if (k == "onlysum") return Method::OnlySum;
  if (k == "sum_perchan" || k == "sum+perchan" || k == "sumperchan") {
    return Method::SumPerChan;
  }
  return std::nullopt;
}

std::string to_string(Category c) {
  switch (c) {
    case Category::Clothing: return "Clothing";
    case Category::Electronics: return "Electronics";
    case Category::Home: return "Home";
    case Category::Health: return "Health";
  }
  return "unknown";
}

std::optional<Category> category_from_string(const std::string& s) {
  std::string k = text::lower_ascii(s);
  if (k == "clothing" || k == "clothing, shoes and jewelry") {
    return Category::Clothing;
  }
  if (k == "electronics" || k == "elec") return Category::Electronics;
  if (k == "home" || k == "home and kitchen") return Category::Home;
  if (k == "health" || k == "health and personal care") {
    return Category::Health;
  }
  return std::nullopt;
}

std::string to_string(Tier t) {
  switch (t) {
    case Tier::HighHigh: return "high_high";
    case Tier::LowLow: return "low_low";
    case Tier::HHPL: return "hhpl";
    case Tier::Unlabeled: return "unlabeled";
  }
  return "unknown";
}

std::optional<Tier> tier_from_string(const std::string& s) {
  std::string k = text::lower_ascii(s);
  if (k == "high_high") return Tier::HighHigh;
  if (k == "low_low") return Tier::LowLow;
  if (k == "hhpl") return Tier::HHPL;
  if (k == "unlabeled") return Tier::Unlabeled;
  return std::nullopt;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Init: return "init";
    case Stage::Summary: return "summary";
    case Stage::Practice: return "practice";
    case Stage::Session: return "session";
    case Stage::Generated: return "generated";
    case Stage::Scored: return "scored";
  }
  return "unknown";
}

std::optional<Stage> stage_from_string(const std::string& s) {
  if (s == "init") return Stage::Init;
  if (s == "summary") return Stage::Summary;
  if (s == "practice") return Stage::Practice;
  if (s == "session") return Stage::Session;
  if (s == "generated") return Stage::Generated;
  if (s == "scored") return Stage::Scored;
  return std::nullopt;
}

// ── JSON conversions ────────────────────────────────────────────

namespace {

json to_json(const Review& r) {
  return json{{"review_id", r.review_id},
              {"product_id", r.product_id},
              {"user_id", r.user_id},
              {"text", r.text},
              {"char_len", r.char_len}};
}

Review review_from_json(const json& j) {
  Review r;
  r.review_id = j.at("review_id").get<std::string>();
  r.product_id = j.at("product_id").get<std::string>();
  r.user_id = j.value("user_id", std::string{});
  r.text = j.at("text").get<std::string>();
  r.char_len = j.at("char_len").get<std::size_t>();
  return r;
}

json to_json(const UserTurn& t) {
  return json{{"analysis", t.analysis},
              {"suggestions", t.suggestions_text},
              {"raw", t.raw},
              {"parsed", t.parsed}};
}

UserTurn user_turn_from_json(const json& j) {
  UserTurn t;
  t.analysis = j.at("analysis").get<std::string>();
  t.suggestions_text = j.at("suggestions").get<std::string>();
  t.raw = j.at("raw").get<std::string>();
  t.parsed = j.at("parsed").get<bool>();
  return t;
}

json to_json(const SupervisorVerdict& v) {
  return json{{"thought", v.thought},
              {"items", v.suggestion_items},
              {"passed", v.passed},
              {"raw", v.raw}};
}

SupervisorVerdict verdict_from_json(const json& j) {
  SupervisorVerdict v;
  v.thought = j.at("thought").get<std::string>();
  v.suggestion_items = j.at("items").get<std::vector<std::string>>();
  v.passed = j.at("passed").get<bool>();
  v.raw = j.at("raw").get<std::string>();
  return v;
}

json to_json(const Attempt& a) {
  return json{{"turn", to_json(a.turn)}, {"verdict", to_json(a.verdict)}};
}

Attempt attempt_from_json(const json& j) {
  return Attempt{user_turn_from_json(j.at("turn")),
                 verdict_from_json(j.at("verdict"))};
}

json to_json(const SuggestionSession& s) {
  json j{{"passed", s.passed}, {"iterations_used", s.iterations_used}};
  json demos = json::array();
  for (const auto& d : s.demos) demos.push_back(to_json(d));
  j["demos"] = std::move(demos);
  json practice = json::array();
  for (const auto& a : s.practice_attempts) practice.push_back(to_json(a));
  j["practice_attempts"] = std::move(practice);
  json formal = json::array();
  for (const auto& a : s.formal_attempts) formal.push_back(to_json(a));
  j["formal_attempts"] = std::move(formal);
  if (s.final_suggestion) j["final_suggestion"] = to_json(*s.final_suggestion);
  return j;
}

SuggestionSession session_from_json(const json& j) {
  SuggestionSession s;
  for (const auto& d : j.at("demos")) s.demos.push_back(user_turn_from_json(d));
  for (const auto& a : j.at("practice_attempts")) {
    s.practice_attempts.push_back(attempt_from_json(a));
  }
  for (const auto& a : j.at("formal_attempts")) {
    s.formal_attempts.push_back(attempt_from_json(a));
  }
  if (j.contains("final_suggestion")) {
    s.final_suggestion = user_turn_from_json(j.at("final_suggestion"));
  }
  s.passed = j.at("passed").get<bool>();
  s.iterations_used = j.at("iterations_used").get<int>();
  return s;
}

json to_json(const EvalScores& e) {
  json j = json::object();
  const char* names[6] = {"product_ac", "product_sc", "history_ac",
                          "history_sc", "user_ac",    "user_sc"};
  auto axes = e.axes();
  for (int i = 0; i < 6; ++i) {
    if (axes[i]->has_value()) j[names[i]] = **axes[i];
  }
  if (e.avg) j["avg"] = *e.avg;
  return j;
}

EvalScores scores_from_json(const json& j) {
  EvalScores e;
  std::optional<int>* slots[6] = {&e.product_ac, &e.product_sc, &e.history_ac,
                                  &e.history_sc, &e.user_ac,    &e.user_sc};
  const char* names[6] = {"product_ac", "product_sc", "history_ac",
                          "history_sc", "user_ac",    "user_sc"};
  for (int i = 0; i < 6; ++i) {
    if (j.contains(names[i])) *slots[i] = j.at(names[i]).get<int>();
  }
  if (j.contains("avg")) e.avg = j.at("avg").get<double>();
  return e;
}

void validate_avg(const EvalScores& e, std::size_t line_number) {
  auto expect = e.recompute_avg();
  if (expect.has_value() != e.avg.has_value()) {
    throw ParseError("eval scores avg does not match present axes",
                     line_number);
  }
  if (expect && std::abs(*expect - *e.avg) > 1e-9) {
    throw ParseError("eval scores avg does not match present axes",
                     line_number);
  }
}

}  // namespace

std::string serialize_run(const RunRecord& r) {
  json j{{"sample_id", r.sample_id},
         {"method", to_string(r.method)},
         {"stage", to_string(r.stage)},
         {"filtered_product_ids", r.filtered_product_ids},
         {"final_summary", r.final_summary},
         {"scores", to_json(r.scores)},
         {"flags", r.flags},
         {"started_at_ms", r.started_at_ms},
         {"finished_at_ms", r.finished_at_ms},
         {"prompt_tokens", r.token_totals.prompt},
         {"completion_tokens", r.token_totals.completion}};
  if (r.generic_summary) j["generic_summary"] = *r.generic_summary;
  if (r.session) j["session"] = to_json(*r.session);
  if (r.selected_history_id) j["selected_history_id"] = *r.selected_history_id;
  json candidates = json::array();
  for (const auto& c : r.rewrite_candidates) {
    candidates.push_back(json{{"text", c.text}, {"scores", to_json(c.scores)}});
  }
  j["rewrite_candidates"] = std::move(candidates);
  return j.dump();
}

RunRecord deserialize_run(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed run record: ") + e.what(),
                     line_number);
  }
  try {
    RunRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    auto method = method_from_string(j.at("method").get<std::string>());
    if (!method) throw ParseError("unknown method", line_number);
    r.method = *method;
    auto stage = stage_from_string(j.at("stage").get<std::string>());
    if (!stage) throw ParseError("unknown stage", line_number);
    r.stage = *stage;
    if (j.contains("generic_summary")) {
      r.generic_summary = j.at("generic_summary").get<std::string>();
    }
    if (j.contains("session")) r.session = session_from_json(j.at("session"));
    r.filtered_product_ids =
        j.at("filtered_product_ids").get<std::vector<std::string>>();
    if (j.contains("selected_history_id")) {
      r.selected_history_id = j.at("selected_history_id").get<std::string>();
    }
    for (const auto& c : j.at("rewrite_candidates")) {
      RewriteCandidate cand;
      cand.text = c.at("text").get<std::string>();
      cand.scores = scores_from_json(c.at("scores"));
      validate_avg(cand.scores, line_number);
      r.rewrite_candidates.push_back(std::move(cand));
    }
    r.final_summary = j.at("final_summary").get<std::string>();
    r.scores = scores_from_json(j.at("scores"));
    validate_avg(r.scores, line_number);
    r.flags = j.at("flags").get<std::vector<std::string>>();
    r.started_at_ms = j.at("started_at_ms").get<std::int64_t>();
    r.finished_at_ms = j.at("finished_at_ms").get<std::int64_t>();
    r.token_totals.prompt = j.at("prompt_tokens").get<std::int64_t>();
    r.token_totals.completion = j.at("completion_tokens").get<std::int64_t>();
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed run record: ") + e.what(),
                     line_number);
  }
}

std::string serialize_sample(const Sample& s) {
  json reviews = json::array();
  for (const auto& r : s.product_reviews) reviews.push_back(to_json(r));
  json history = json::array();
  for (const auto& r : s.history) history.push_back(to_json(r));
  json j{{"sample_id", s.sample_id},
         {"category", to_string(s.category)},
         {"product_reviews", std::move(reviews)},
         {"history", std::move(history)},
         {"personalized_review", to_json(s.personalized_review)},
         {"tier", to_string(s.tier)}};
  return j.dump();
}

Sample deserialize_sample(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed sample: ") + e.what(),
                     line_number);
  }
  try {
    Sample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    auto cat = category_from_string(j.at("category").get<std::string>());
    if (!cat) throw ParseError("unknown category", line_number);
    s.category = *cat;
    for (const auto& r : j.at("product_reviews")) {
      s.product_reviews.push_back(review_from_json(r));
    }
    for (const auto& r : j.at("history")) {
      s.history.push_back(review_from_json(r));
    }
    s.personalized_review = review_from_json(j.at("personalized_review"));
    auto tier = tier_from_string(j.value("tier", std::string{"unlabeled"}));
    if (!tier) throw ParseError("unknown tier", line_number);
    s.tier = *tier;
    return s;
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed sample: ") + e.what(),
                     line_number);
  }
}

}  // namespace rehearsal
