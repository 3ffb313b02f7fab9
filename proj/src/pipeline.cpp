#include "rehearsal/pipeline.hpp"

#include <algorithm>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

bool stop_after_iteration(int iteration_count, double pass_rate,
                          const LoopConfig& cfg) {
  if (iteration_count <= cfg.early_iteration_bound) {
    if (pass_rate > cfg.batch_pass_early) return true;
  } else if (pass_rate > cfg.batch_pass_late) {
    return true;
  }
  return iteration_count >= cfg.max_iterations;
}

Pipeline::Pipeline(Gateways gateways,
                   std::shared_ptr<RetrievalRewriter> retrieval,
                   std::shared_ptr<Judge> judge, const PromptLibrary* prompts,
                   LoopConfig cfg, RunStore* store)
    : gw_(std::move(gateways)),
      retrieval_(std::move(retrieval)),
      judge_(std::move(judge)),
      prompts_(prompts),
      cfg_(cfg),
      store_(store) {
  if (!gw_.summarizer || !gw_.user_agent || !gw_.supervisor) {
    throw ConfigError("pipeline requires summarizer/user_agent/supervisor gateways");
  }
  if (!retrieval_ || !judge_ || !prompts_) {
    throw ConfigError("pipeline is missing a dependency");
  }
  if (cfg_.batch_pass_late <= 0 || cfg_.batch_pass_late > cfg_.batch_pass_early ||
      cfg_.batch_pass_early > 1.0) {
    throw ConfigError("pass-rate bounds must satisfy 0 < late <= early <= 1");
  }
  if (cfg_.early_iteration_bound > cfg_.max_iterations) {
    throw ConfigError("early_iteration_bound must not exceed max_iterations");
  }
}

std::string Pipeline::history_blocks(const Sample& sample) const {
  std::vector<std::string> texts;
  texts.reserve(sample.history.size());
  for (const Review& r : sample.history) texts.push_back(r.text);
  return text::numbered_blocks(texts);
}

std::string Pipeline::product_blocks(const Sample& sample) const {
  std::vector<std::string> texts;
  texts.reserve(sample.product_reviews.size());
  for (const Review& r : sample.product_reviews) texts.push_back(r.text);
  return text::numbered_blocks(texts);
}

void Pipeline::persist(RunRecord& rec) {
  rec.finished_at_ms = now_ms();
  if (store_) store_->append(rec);
}

// ── Stage 1 ─────────────────────────────────────────────────────

std::string Pipeline::generic_summarize(const Sample& sample,
                                        TokenTally* tally) {
  if (sample.product_reviews.empty()) {
    throw PreconditionError("generic_summarize requires product reviews");
  }
  std::string prompt = prompts_->render(
      TemplateId::GenericSummary, {{"reviews", product_blocks(sample)}});
  LlmResponse resp =
      gw_.summarizer->complete({{Role::User, prompt}}, "summarizer");
  if (tally) tally->add(resp);
  return resp.content;
}

// ── Stage 2 ─────────────────────────────────────────────────────

std::string Pipeline::user_initial_prompt(
    const Sample& sample, const std::string& summary,
    std::span<const UserTurn> demos) const {
  return prompts_->render(TemplateId::UserInitial,
                          {{"history", history_blocks(sample)},
                           {"summary", summary}},
                          demos);
}

std::string Pipeline::user_revise_prompt(const Sample& sample,
                                         const std::string& summary,
                                         const Attempt& last) const {
  return prompts_->render(
      TemplateId::UserRevise,
      {{"history", history_blocks(sample)},
       {"summary", summary},
       {"previous_response", last.turn.raw},
       {"recommendations", last.verdict.recommendations_payload()}});
}

Attempt Pipeline::run_attempt(const Sample& sample, const std::string& summary,
                              const std::string& user_prompt,
                              TokenTally* tally) {
  Attempt attempt;

  LlmResponse user_resp =
      gw_.user_agent->complete({{Role::User, user_prompt}}, "user_agent");
  if (tally) tally->add(user_resp);
  try {
    attempt.turn = parse_user_turn(user_resp.content);
  } catch (const ParseError&) {
    attempt.turn.raw = user_resp.content;
    attempt.turn.parsed = false;
  }

  std::string sup_prompt =
      prompts_->render(TemplateId::Supervisor,
                       {{"response", user_resp.content},
                        {"summary", summary},
                        {"history", history_blocks(sample)}});
  LlmResponse sup_resp =
      gw_.supervisor->complete({{Role::User, sup_prompt}}, "supervisor");
  if (tally) tally->add(sup_resp);
  try {
    attempt.verdict = parse_supervisor(sup_resp.content);
  } catch (const ParseError&) {
    attempt.verdict.raw = sup_resp.content;
    attempt.verdict.passed = false;
  }
  return attempt;
}

std::vector<UserTurn> Pipeline::practice_phase(const Sample& sample,
                                               const std::string& summary,
                                               SuggestionSession& session,
                                               TokenTally* tally) {
  if (summary == kDegenerateContent) {
    throw PreconditionError("practice_phase requires a non-degenerate summary");
  }

  std::vector<UserTurn> demos;
  for (int round = 1; round <= cfg_.practice_rounds; ++round) {
    std::string prompt =
        round == 1 ? user_initial_prompt(sample, summary, {})
                   : user_revise_prompt(sample, summary,
                                        session.practice_attempts.back());
    Attempt attempt = run_attempt(sample, summary, prompt, tally);
    if (attempt.verdict.passed) demos.push_back(attempt.turn);
    session.practice_attempts.push_back(std::move(attempt));
  }

  // No round passed: use every attempt, so a single bad example cannot
  // dominate the formal phase.
  if (demos.empty()) {
    for (const Attempt& a : session.practice_attempts) demos.push_back(a.turn);
  }
  session.demos = demos;
  return demos;
}

FormalOutcome Pipeline::formal_phase(std::vector<FormalItem> items) {
  if (items.empty()) {
    throw PreconditionError("formal_phase requires a non-empty batch");
  }

  FormalOutcome outcome;
  std::vector<SampleStatus> status(items.size(), SampleStatus::Pending);
  std::size_t passed_count = 0;

  int iteration = 0;
  while (iteration < cfg_.max_iterations) {
    ++iteration;

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (status[i] == SampleStatus::Pending) pending.push_back(i);
    }
    if (pending.empty()) break;

    // One user turn per pending sample, then one supervisor verdict.
    std::vector<BatchItem> user_batch;
    user_batch.reserve(pending.size());
    for (std::size_t i : pending) {
      FormalItem& item = items[i];
      std::string prompt =
          item.session.formal_attempts.empty()
              ? user_initial_prompt(item.sample, item.summary,
                                    item.session.demos)
              : user_revise_prompt(item.sample, item.summary,
                                   item.session.formal_attempts.back());
      user_batch.push_back({{{Role::User, prompt}}, "user_agent"});
    }
    std::vector<CallOutcome> user_results =
        gw_.user_agent->complete_many(user_batch);

    std::vector<std::size_t> live;
    std::vector<BatchItem> sup_batch;
    std::vector<UserTurn> turns(items.size());
    for (std::size_t k = 0; k < pending.size(); ++k) {
      std::size_t i = pending[k];
      if (!user_results[k].ok()) {
        status[i] = SampleStatus::Exhausted;
        outcome.errors[items[i].sample.sample_id] = user_results[k].error;
        continue;
      }
      const LlmResponse& resp = *user_results[k].response;
      outcome.tokens[items[i].sample.sample_id].add(resp);
      try {
        turns[i] = parse_user_turn(resp.content);
      } catch (const ParseError&) {
        turns[i] = UserTurn{};
        turns[i].raw = resp.content;
      }
      std::string sup_prompt =
          prompts_->render(TemplateId::Supervisor,
                           {{"response", resp.content},
                            {"summary", items[i].summary},
                            {"history", history_blocks(items[i].sample)}});
      live.push_back(i);
      sup_batch.push_back({{{Role::User, sup_prompt}}, "supervisor"});
    }

    if (!sup_batch.empty()) {
      std::vector<CallOutcome> sup_results =
          gw_.supervisor->complete_many(sup_batch);
      for (std::size_t k = 0; k < live.size(); ++k) {
        std::size_t i = live[k];
        if (!sup_results[k].ok()) {
          status[i] = SampleStatus::Exhausted;
          outcome.errors[items[i].sample.sample_id] = sup_results[k].error;
          // The user turn still counts as the latest attempt.
          items[i].session.formal_attempts.push_back(
              Attempt{turns[i], SupervisorVerdict{}});
          continue;
        }
        const LlmResponse& resp = *sup_results[k].response;
        outcome.tokens[items[i].sample.sample_id].add(resp);
        Attempt attempt;
        attempt.turn = turns[i];
        try {
          attempt.verdict = parse_supervisor(resp.content);
        } catch (const ParseError&) {
          attempt.verdict.raw = resp.content;
        }
        bool passed = attempt.verdict.passed;
        items[i].session.formal_attempts.push_back(std::move(attempt));
        if (passed) {
          status[i] = SampleStatus::Passed;
          ++passed_count;
        }
      }
    }

    BatchState state;
    state.iteration_count = iteration;
    state.pass_rate =
        static_cast<double>(passed_count) / static_cast<double>(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      state.status[items[i].sample.sample_id] = status[i];
    }
    outcome.trace.push_back(std::move(state));

    if (stop_after_iteration(iteration, outcome.trace.back().pass_rate,
                             cfg_)) {
      break;
    }
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    SuggestionSession& session = items[i].session;
    session.passed = status[i] == SampleStatus::Passed;
    session.iterations_used =
        static_cast<int>(session.formal_attempts.size());
    if (!session.formal_attempts.empty()) {
      session.final_suggestion = session.formal_attempts.back().turn;
    }
    outcome.sessions[items[i].sample.sample_id] = std::move(session);
  }
  return outcome;
}

// ── Stage 3 + composition ───────────────────────────────────────

void Pipeline::rewrite_stage(const Sample& sample, RunRecord& rec) {
  const SuggestionSession& session = *rec.session;
  if (!session.final_suggestion) {
    rec.final_summary = *rec.generic_summary;
    rec.flags.push_back("no suggestion available; kept generic summary");
    return;
  }
  const std::string& suggestion = session.final_suggestion->suggestion_payload();

  FilterResult filter = retrieval_->filter_product_reviews(
      sample.product_reviews, suggestion, sample.sample_id);
  if (!filter.error.empty()) {
    rec.flags.push_back("product filter error: " + filter.error);
  }
  for (const Review& r : filter.kept) {
    rec.filtered_product_ids.push_back(r.review_id);
  }

  HistorySelection selection =
      retrieval_->select_history_review(sample.history, suggestion);
  rec.selected_history_id = selection.review.review_id;

  RewriteOutcome rewrite = retrieval_->rewrite_best_of(
      *rec.generic_summary, suggestion, filter.kept, selection.review,
      cfg_.rewrite_candidates, *judge_, sample, &rec.token_totals);
  rec.rewrite_candidates = rewrite.candidates;
  rec.final_summary = rewrite.final_text;
  if (rewrite.degraded) {
    rec.flags.push_back("all rewrite candidates degenerate; kept generic summary");
  } else {
    // The winner was already judged on all six axes; those are the
    // record's scores.
    rec.scores = rewrite.candidates[rewrite.winning_index].scores;
  }
}

std::vector<RunRecord> Pipeline::run_rehearsal_batch(
    const std::vector<Sample>& samples) {
  std::map<RunStore::Key, RunRecord> existing;
  if (store_) existing = store_->load_latest();

  std::vector<RunRecord> records(samples.size());
  auto record_for = [&](const Sample& s) {
    auto it = existing.find({s.sample_id, Method::Rehearsal});
    if (it != existing.end()) return it->second;
    RunRecord rec;
    rec.sample_id = s.sample_id;
    rec.method = Method::Rehearsal;
    rec.started_at_ms = now_ms();
    return rec;
  };

  // Stage 1: generic summaries.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    records[i] = record_for(samples[i]);
    RunRecord& rec = records[i];
    if (rec.stage >= Stage::Summary) continue;
    try {
      rec.generic_summary = generic_summarize(samples[i], &rec.token_totals);
    } catch (const std::exception& e) {
      rec.generic_summary = kDegenerateContent;
      rec.flags.push_back(std::string("summary stage error: ") + e.what());
    }
    rec.stage = Stage::Summary;
    persist(rec);
    if (*rec.generic_summary == kDegenerateContent) {
      rec.final_summary = kDegenerateContent;
      rec.flags.push_back("degenerate generic summary; later stages skipped");
      rec.stage = Stage::Generated;
      persist(rec);
    }
  }

  // Stage 2a: practice, per sample.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RunRecord& rec = records[i];
    if (rec.stage >= Stage::Practice) continue;
    SuggestionSession session;
    try {
      practice_phase(samples[i], *rec.generic_summary, session,
                     &rec.token_totals);
    } catch (const std::exception& e) {
      rec.flags.push_back(std::string("practice stage error: ") + e.what());
      rec.final_summary = kDegenerateContent;
      rec.stage = Stage::Generated;
      persist(rec);
      continue;
    }
    rec.session = std::move(session);
    rec.stage = Stage::Practice;
    persist(rec);
  }

  // Stage 2b: one formal batch over everything still in flight.
  std::vector<std::size_t> formal_indices;
  std::vector<FormalItem> items;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RunRecord& rec = records[i];
    if (rec.stage != Stage::Practice) continue;
    formal_indices.push_back(i);
    items.push_back(FormalItem{samples[i], *rec.generic_summary, *rec.session});
  }
  if (!items.empty()) {
    FormalOutcome outcome = formal_phase(std::move(items));
    for (std::size_t i : formal_indices) {
      RunRecord& rec = records[i];
      rec.session = outcome.sessions.at(rec.sample_id);
      auto tok = outcome.tokens.find(rec.sample_id);
      if (tok != outcome.tokens.end()) {
        rec.token_totals.prompt += tok->second.prompt;
        rec.token_totals.completion += tok->second.completion;
      }
      auto err = outcome.errors.find(rec.sample_id);
      if (err != outcome.errors.end()) {
        rec.flags.push_back("formal stage error: " + err->second);
      }
      rec.stage = Stage::Session;
      persist(rec);
    }
  }

  // Stage 3: retrieval-augmented rewriting.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RunRecord& rec = records[i];
    if (rec.stage != Stage::Session) continue;
    try {
      rewrite_stage(samples[i], rec);
    } catch (const std::exception& e) {
      rec.flags.push_back(std::string("rewrite stage error: ") + e.what());
      rec.final_summary = *rec.generic_summary;
    }
    rec.stage = rec.scores.present_count() > 0 ? Stage::Scored
                                               : Stage::Generated;
    persist(rec);
  }

  return records;
}

RunRecord Pipeline::run_rehearsal(const Sample& sample) {
  return run_rehearsal_batch({sample}).front();
}

RunRecord Pipeline::run_baseline(Method method, const Sample& sample) {
  if (method == Method::Rehearsal) {
    throw PreconditionError("run_baseline covers the four baselines only");
  }

  if (store_) {
    auto existing = store_->load_latest();
    auto it = existing.find({sample.sample_id, method});
    if (it != existing.end() && it->second.stage >= Stage::Generated) {
      return it->second;
    }
  }

  RunRecord rec;
  rec.sample_id = sample.sample_id;
  rec.method = method;
  rec.started_at_ms = now_ms();

  auto call = [&](TemplateId id, const std::map<std::string, std::string>& slots,
                  const std::string& tag) {
    std::string prompt = prompts_->render(id, slots);
    LlmResponse resp = gw_.summarizer->complete({{Role::User, prompt}}, tag);
    rec.token_totals.add(resp);
    return resp.content;
  };

  switch (method) {
    case Method::OnlySum: {
      std::string summary = generic_summarize(sample, &rec.token_totals);
      rec.generic_summary = summary;
      rec.final_summary = summary;
      break;
    }
    case Method::SumPerChan: {
      std::string summary = generic_summarize(sample, &rec.token_totals);
      rec.generic_summary = summary;
      if (summary == kDegenerateContent) {
        rec.final_summary = kDegenerateContent;
        rec.flags.push_back("degenerate generic summary");
        break;
      }
      rec.final_summary = call(TemplateId::BaselinePerChan,
                               {{"summary", summary},
                                {"history", history_blocks(sample)}},
                               "baseline_perchan");
      break;
    }
    case Method::PerSum: {
      rec.final_summary = call(TemplateId::BaselinePerSum,
                               {{"reviews", product_blocks(sample)},
                                {"history", history_blocks(sample)}},
                               "baseline_persum");
      break;
    }
    case Method::AnaPerSum: {
      std::string analysis = call(TemplateId::BaselineAnalyze,
                                  {{"history", history_blocks(sample)}},
                                  "baseline_analyze");
      if (analysis == kDegenerateContent) {
        rec.final_summary = kDegenerateContent;
        rec.flags.push_back("degenerate interest analysis");
        break;
      }
      rec.final_summary = call(TemplateId::BaselineAnaSum,
                               {{"reviews", product_blocks(sample)},
                                {"analysis", analysis}},
                               "baseline_anasum");
      break;
    }
    case Method::Rehearsal:
      break;  // unreachable
  }

  rec.stage = Stage::Generated;
  persist(rec);
  return rec;
}

}  // namespace rehearsal
