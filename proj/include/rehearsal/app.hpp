#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rehearsal/config.hpp"
#include "rehearsal/dataset.hpp"
#include "rehearsal/pipeline.hpp"
#include "rehearsal/run_store.hpp"

namespace rehearsal {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitHard = 2;

/// Wired-up application state: backends, gateways per role, prompt
/// library, run store.
class AppContext {
public:
  explicit AppContext(AppConfig cfg);

  const AppConfig& config() const { return cfg_; }
  const PromptLibrary& prompts() const { return prompts_; }

  std::shared_ptr<Gateway> role_gateway(const std::string& role) const;

  /// The scripted backend behind a role, when it is scripted (ledger
  /// access for tests); null otherwise.
  std::shared_ptr<class ScriptedBackend> scripted_backend(
      const std::string& role) const;

  RunStore& store();

  std::shared_ptr<Judge> make_judge() const;
  std::shared_ptr<Judge> make_judge(JudgeScale scale) const;
  std::shared_ptr<RetrievalRewriter> make_retrieval() const;
  std::unique_ptr<Pipeline> make_pipeline();

private:
  AppConfig cfg_;
  PromptLibrary prompts_;
  std::map<std::string, std::shared_ptr<ChatBackend>> backends_;
  std::map<std::string, std::shared_ptr<Gateway>> gateways_;
  std::unique_ptr<RunStore> store_;
};

/// Dataset loading with per-line validation; invalid samples are skipped
/// with a warning.
std::vector<Sample> load_dataset(const std::filesystem::path& path,
                                 std::ostream& log);

// ── Commands ────────────────────────────────────────────────────

int cmd_build_dataset(AppContext& ctx,
                      const std::vector<std::filesystem::path>& corpus_files,
                      const TierCounts& counts,
                      const std::filesystem::path& dataset_out,
                      const std::filesystem::path& manifest_out,
                      std::ostream& log);

int cmd_run(AppContext& ctx, const std::filesystem::path& dataset_path,
            const std::vector<Method>& methods, std::ostream& log);

int cmd_evaluate(AppContext& ctx, const std::filesystem::path& dataset_path,
                 std::ostream& log);

// ── Reporting ───────────────────────────────────────────────────

struct AxisStat {
  double mean = 0.0;
  int count = 0;  // records contributing to this axis
};

struct ReportRow {
  Method method = Method::OnlySum;
  std::string group;  // tier label for per-tier rows, empty otherwise
  int records = 0;
  std::optional<AxisStat> axes[6];  // product/history/user x AC/SC
  std::optional<double> avg;        // mean of the present axis means
};

struct Report {
  std::vector<ReportRow> rows;
};

/// Means per method in fixed column order (Product AC/SC, History AC/SC,
/// User AC/SC, AVG). Records are consumed in sample_id order so repeated
/// runs produce identical floats. `tiers` (sample_id -> tier), when
/// given, adds a per-tier breakdown.
Report build_report(const std::vector<RunRecord>& records,
                    const std::map<std::string, Tier>* tiers = nullptr);

/// Aligned text in the six-axis table shape, means to 2 decimals, with a
/// coverage note for every axis that is missing on some records.
std::string format_report_text(const Report& report);

std::string format_report_json(const Report& report);

int cmd_report(AppContext& ctx, const std::filesystem::path& dataset_path,
               bool by_tier, const std::filesystem::path& json_out,
               std::ostream& out, std::ostream& log);

}  // namespace rehearsal
