#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rehearsal/domain.hpp"
#include "rehearsal/gateway.hpp"
#include "rehearsal/judge.hpp"
#include "rehearsal/prompts.hpp"
#include "rehearsal/retrieval.hpp"
#include "rehearsal/run_store.hpp"

namespace rehearsal {

/// Loop constants for the practice + formal suggestion phases. Defaults
/// are the published operating point: 3 practice rounds, >95% pass rate
/// within the first 5 iterations or >85% after, hard cap 15, best-of-5
/// rewriting.
struct LoopConfig {
  int practice_rounds = 3;
  double batch_pass_early = 0.95;
  double batch_pass_late = 0.85;
  int early_iteration_bound = 5;
  int max_iterations = 15;
  int rewrite_candidates = 5;
};

enum class SampleStatus { Pending, Passed, Exhausted };

struct BatchState {
  std::map<std::string, SampleStatus> status;
  int iteration_count = 0;
  double pass_rate = 0.0;
};

/// The formal-phase stop rule, evaluated after each completed iteration:
/// stop when the rate clears the early bar within the first
/// `early_iteration_bound` iterations, clears the late bar after, or the
/// hard iteration cap is reached (a 16th iteration never starts).
bool stop_after_iteration(int iteration_count, double pass_rate,
                          const LoopConfig& cfg);

struct FormalItem {
  Sample sample;
  std::string summary;
  SuggestionSession session;  // demos (and practice transcript) filled in
};

struct FormalOutcome {
  std::map<std::string, SuggestionSession> sessions;
  std::vector<BatchState> trace;  // one entry per completed iteration
  std::map<std::string, TokenTally> tokens;
  std::map<std::string, std::string> errors;  // sample_id -> gateway error
};

/// The staged state machine: generic summarization, the supervised
/// role-play suggestion loop, retrieval-augmented rewriting, and the four
/// baseline methods. Every stage output is persisted to the run store as
/// soon as it exists, so interrupted campaigns resume without repeating
/// model calls.
class Pipeline {
public:
  struct Gateways {
    std::shared_ptr<Gateway> summarizer;
    std::shared_ptr<Gateway> user_agent;
    std::shared_ptr<Gateway> supervisor;
  };

  Pipeline(Gateways gateways, std::shared_ptr<RetrievalRewriter> retrieval,
           std::shared_ptr<Judge> judge, const PromptLibrary* prompts,
           LoopConfig cfg, RunStore* store);

  /// Stage 1: one model call over the numbered product reviews. A
  /// degenerate backend yields the literal "None".
  std::string generic_summarize(const Sample& sample,
                                TokenTally* tally = nullptr);

  /// Stage 2a: exactly practice_rounds attempts, each a user turn plus a
  /// supervisor verdict. Every passing turn becomes a demo; when none
  /// pass, all attempts do. Fills the session transcript and returns the
  /// demos.
  std::vector<UserTurn> practice_phase(const Sample& sample,
                                       const std::string& summary,
                                       SuggestionSession& session,
                                       TokenTally* tally = nullptr);

  /// Stage 2b: the batch iterate-until-pass-rate loop. Each iteration
  /// gives every pending sample one attempt; gateway failures exhaust
  /// that sample and the rest continue.
  FormalOutcome formal_phase(std::vector<FormalItem> items);

  /// Full composition for one batch, resumable per stage via the store.
  std::vector<RunRecord> run_rehearsal_batch(const std::vector<Sample>& samples);

  RunRecord run_rehearsal(const Sample& sample);

  /// PerSum / Ana+PerSum / OnlySum / Sum+PerChan.
  RunRecord run_baseline(Method method, const Sample& sample);

  const LoopConfig& config() const { return cfg_; }

private:
  std::string user_initial_prompt(const Sample& sample,
                                  const std::string& summary,
                                  std::span<const UserTurn> demos) const;
  std::string user_revise_prompt(const Sample& sample,
                                 const std::string& summary,
                                 const Attempt& last) const;
  Attempt run_attempt(const Sample& sample, const std::string& summary,
                      const std::string& user_prompt, TokenTally* tally);
  void rewrite_stage(const Sample& sample, RunRecord& rec);
  void persist(RunRecord& rec);

  std::string history_blocks(const Sample& sample) const;
  std::string product_blocks(const Sample& sample) const;

  Gateways gw_;
  std::shared_ptr<RetrievalRewriter> retrieval_;
  std::shared_ptr<Judge> judge_;
  const PromptLibrary* prompts_;
  LoopConfig cfg_;
  RunStore* store_;  // may be null (no persistence)
};

}  // namespace rehearsal
