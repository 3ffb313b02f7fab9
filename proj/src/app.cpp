#include "rehearsal/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "rehearsal/errors.hpp"
#include "rehearsal/http_backend.hpp"
#include "rehearsal/scripted_backend.hpp"

namespace rehearsal {

using nlohmann::json;

AppContext::AppContext(AppConfig cfg) : cfg_(std::move(cfg)) {
  prompts_ = cfg_.paths.template_overrides.empty()
                 ? PromptLibrary()
                 : PromptLibrary::with_overrides(cfg_.paths.template_overrides);

  for (auto& [name, spec] : cfg_.backends) {
    BackendConfig backend_cfg = spec.config;
    backend_cfg.seed = cfg_.seed;
    if (!spec.api_key_env.empty()) {
      const char* key = std::getenv(spec.api_key_env.c_str());
      if (key) backend_cfg.api_key = key;
    }

    std::shared_ptr<ChatBackend> backend;
    if (spec.kind == "scripted") {
      if (spec.mock_script.empty()) {
        throw ConfigError("scripted backend '" + name +
                          "' needs a mock_script path");
      }
      backend = ScriptedBackend::from_script_file(spec.mock_script, cfg_.seed);
    } else {
      if (backend_cfg.endpoint_url.empty()) {
        throw ConfigError("http backend '" + name + "' needs an endpoint_url");
      }
      backend = std::make_shared<HttpBackend>(backend_cfg);
    }
    backends_[name] = backend;
    gateways_[name] = std::make_shared<Gateway>(backend, backend_cfg);
  }

  if (!cfg_.paths.run_store.empty()) {
    store_ = std::make_unique<RunStore>(cfg_.paths.run_store);
  }
}

std::shared_ptr<Gateway> AppContext::role_gateway(
    const std::string& role) const {
  auto role_it = cfg_.roles.find(role);
  if (role_it == cfg_.roles.end()) {
    throw ConfigError("unknown role: " + role);
  }
  auto gw_it = gateways_.find(role_it->second);
  if (gw_it == gateways_.end()) {
    throw ConfigError("role '" + role + "' resolves to unconfigured backend '" +
                      role_it->second + "'");
  }
  return gw_it->second;
}

std::shared_ptr<ScriptedBackend> AppContext::scripted_backend(
    const std::string& role) const {
  auto role_it = cfg_.roles.find(role);
  if (role_it == cfg_.roles.end()) return nullptr;
  auto backend_it = backends_.find(role_it->second);
  if (backend_it == backends_.end()) return nullptr;
  return std::dynamic_pointer_cast<ScriptedBackend>(backend_it->second);
}

RunStore& AppContext::store() {
  if (!store_) throw ConfigError("no run store path configured");
  return *store_;
}

std::shared_ptr<Judge> AppContext::make_judge() const {
  return make_judge(cfg_.judge.scale);
}

std::shared_ptr<Judge> AppContext::make_judge(JudgeScale scale) const {
  JudgeConfig jc = cfg_.judge;
  jc.scale = scale;
  return std::make_shared<Judge>(role_gateway("judge"), &prompts_, jc);
}

std::shared_ptr<RetrievalRewriter> AppContext::make_retrieval() const {
  return std::make_shared<RetrievalRewriter>(
      role_gateway("filter"), role_gateway("summarizer"), &prompts_,
      cfg_.filter, cfg_.seed);
}

std::unique_ptr<Pipeline> AppContext::make_pipeline() {
  Pipeline::Gateways gws{role_gateway("summarizer"), role_gateway("user_agent"),
                         role_gateway("supervisor")};
  return std::make_unique<Pipeline>(gws, make_retrieval(), make_judge(),
                                    &prompts_, cfg_.loop,
                                    store_ ? store_.get() : nullptr);
}

std::vector<Sample> load_dataset(const std::filesystem::path& path,
                                 std::ostream& log) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dataset: " + path.string());
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    Sample s = deserialize_sample(line, line_number);
    auto violations = validate_sample(s);
    if (!violations.empty()) {
      log << "warning: skipping invalid sample " << s.sample_id << " ("
          << violations.front() << ")\n";
      continue;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

// ── build-dataset ───────────────────────────────────────────────

int cmd_build_dataset(AppContext& ctx,
                      const std::vector<std::filesystem::path>& corpus_files,
                      const TierCounts& counts,
                      const std::filesystem::path& dataset_out,
                      const std::filesystem::path& manifest_out,
                      std::ostream& log) {
  std::vector<RawReview> raw;
  IngestStats stats;
  for (const auto& file : corpus_files) {
    auto part = ingest_reviews(file, ctx.config().corpus_fields, &stats);
    raw.insert(raw.end(), part.begin(), part.end());
  }
  for (const std::string& w : stats.warnings) log << "warning: " << w << "\n";

  std::vector<Sample> candidates = assemble_candidates(raw);
  std::vector<Sample> round1 = filter_round1(candidates);
  std::vector<Sample> round2 = filter_round2(round1);

  // Tier judging predates the 0-100 rescale; it always runs on the
  // original 1-5 prompts regardless of the evaluation-scale setting.
  auto judge = ctx.make_judge(JudgeScale::OneToFive);
  TierSampleResult tiers =
      tier_sample(round2, *judge, counts, ctx.config().seed);

  std::ofstream out(dataset_out);
  if (!out) {
    log << "error: cannot write dataset to " << dataset_out << "\n";
    return kExitHard;
  }
  for (const Sample& s : tiers.selected) out << serialize_sample(s) << "\n";

  json tier_counts = json::object();
  for (const auto& [category, per_tier] : tiers.counts) {
    tier_counts[category] = per_tier;
  }
  json manifest{
      {"seed", ctx.config().seed},
      {"corpus_lines", stats.lines_read},
      {"corpus_skipped", stats.skipped},
      {"candidates", candidates.size()},
      {"round1_survivors", round1.size()},
      {"round2_survivors", round2.size()},
      {"selected", tiers.selected.size()},
      {"counts", std::move(tier_counts)},
      {"shortfalls", tiers.shortfalls},
      {"excluded", tiers.excluded},
      {"thresholds",
       {{"history_count_min_exclusive", kHistoryCountMinExclusive},
        {"history_count_max_exclusive", kHistoryCountMaxExclusive},
        {"history_chars_max_exclusive", kHistoryCharsMaxExclusive},
        {"rouge_sum_min", kRougeSumThreshold},
        {"tier_high_above", 4},
        {"tier_low_at_most", 3}}}};
  std::ofstream mout(manifest_out);
  if (!mout) {
    log << "error: cannot write manifest to " << manifest_out << "\n";
    return kExitHard;
  }
  mout << manifest.dump(2) << "\n";

  for (const std::string& s : tiers.shortfalls) {
    log << "shortfall: " << s << "\n";
  }
  log << "dataset: " << tiers.selected.size() << " samples ("
      << round2.size() << " survivors of " << candidates.size()
      << " candidates)\n";
  return kExitOk;
}

// ── run ─────────────────────────────────────────────────────────

int cmd_run(AppContext& ctx, const std::filesystem::path& dataset_path,
            const std::vector<Method>& methods, std::ostream& log) {
  std::vector<Sample> samples = load_dataset(dataset_path, log);
  if (samples.empty()) {
    log << "error: dataset has no usable samples\n";
    return kExitHard;
  }

  auto pipeline = ctx.make_pipeline();
  bool partial = false;

  for (Method method : methods) {
    if (method == Method::Rehearsal) {
      std::vector<RunRecord> records = pipeline->run_rehearsal_batch(samples);
      for (const RunRecord& rec : records) {
        for (const std::string& flag : rec.flags) {
          log << rec.sample_id << " [rehearsal]: " << flag << "\n";
          partial = true;
        }
      }
      continue;
    }
    for (const Sample& s : samples) {
      try {
        pipeline->run_baseline(method, s);
      } catch (const std::exception& e) {
        log << s.sample_id << " [" << to_string(method)
            << "]: " << e.what() << "\n";
        RunRecord failed;
        failed.sample_id = s.sample_id;
        failed.method = method;
        failed.flags.push_back(std::string("run error: ") + e.what());
        failed.started_at_ms = now_ms();
        failed.finished_at_ms = now_ms();
        ctx.store().append(failed);
        partial = true;
      }
    }
  }
  return partial ? kExitPartial : kExitOk;
}

// ── evaluate ────────────────────────────────────────────────────

int cmd_evaluate(AppContext& ctx, const std::filesystem::path& dataset_path,
                 std::ostream& log) {
  std::vector<Sample> samples = load_dataset(dataset_path, log);
  std::map<std::string, const Sample*> by_id;
  for (const Sample& s : samples) by_id[s.sample_id] = &s;

  auto judge = ctx.make_judge();
  bool partial = false;

  for (auto& [key, rec] : ctx.store().load_latest()) {
    if (rec.stage == Stage::Scored) continue;  // idempotent
    if (rec.stage < Stage::Generated) {
      log << rec.sample_id << " [" << to_string(rec.method)
          << "]: not generated yet; skipping\n";
      partial = true;
      continue;
    }

    if (rec.final_summary == kDegenerateContent) {
      rec.scores = EvalScores{};  // all axes stay missing
      rec.stage = Stage::Scored;
      rec.finished_at_ms = now_ms();
      ctx.store().append(rec);
      continue;
    }

    auto sample_it = by_id.find(rec.sample_id);
    if (sample_it == by_id.end()) {
      log << rec.sample_id << ": not in dataset; cannot evaluate\n";
      partial = true;
      continue;
    }
    const Sample& s = *sample_it->second;

    std::vector<std::string> product;
    for (const Review& r : s.product_reviews) product.push_back(r.text);
    std::vector<std::string> history;
    for (const Review& r : s.history) history.push_back(r.text);
    std::vector<std::string> user = {s.personalized_review.text};

    struct AxisSpec {
      std::optional<int>* slot;
      const std::vector<std::string>* refs;
      JudgeMetric metric;
    };
    AxisSpec specs[6] = {
        {&rec.scores.product_ac, &product, JudgeMetric::AC},
        {&rec.scores.product_sc, &product, JudgeMetric::SC},
        {&rec.scores.history_ac, &history, JudgeMetric::AC},
        {&rec.scores.history_sc, &history, JudgeMetric::SC},
        {&rec.scores.user_ac, &user, JudgeMetric::AC},
        {&rec.scores.user_sc, &user, JudgeMetric::SC},
    };
    for (AxisSpec& spec : specs) {
      if (spec.slot->has_value()) continue;  // only missing axes recomputed
      *spec.slot = judge->score_axis(rec.final_summary, *spec.refs,
                                     spec.metric, &rec.token_totals);
    }
    rec.scores.finalize();
    rec.stage = Stage::Scored;
    rec.finished_at_ms = now_ms();
    ctx.store().append(rec);
  }
  return partial ? kExitPartial : kExitOk;
}

// ── report ──────────────────────────────────────────────────────

namespace {

constexpr Method kMethodOrder[] = {Method::PerSum, Method::AnaPerSum,
                                   Method::OnlySum, Method::SumPerChan,
                                   Method::Rehearsal};

constexpr const char* kAxisNames[6] = {"product_ac", "product_sc",
                                       "history_ac", "history_sc",
                                       "user_ac",    "user_sc"};

ReportRow make_row(Method method, const std::string& group,
                   const std::vector<const RunRecord*>& records) {
  ReportRow row;
  row.method = method;
  row.group = group;
  row.records = static_cast<int>(records.size());

  double sums[6] = {0, 0, 0, 0, 0, 0};
  int counts[6] = {0, 0, 0, 0, 0, 0};
  for (const RunRecord* rec : records) {
    auto axes = rec->scores.axes();
    for (int a = 0; a < 6; ++a) {
      if (axes[a]->has_value()) {
        sums[a] += **axes[a];
        ++counts[a];
      }
    }
  }

  double mean_sum = 0;
  int mean_count = 0;
  for (int a = 0; a < 6; ++a) {
    if (counts[a] > 0) {
      row.axes[a] = AxisStat{sums[a] / counts[a], counts[a]};
      mean_sum += row.axes[a]->mean;
      ++mean_count;
    }
  }
  if (mean_count > 0) row.avg = mean_sum / mean_count;
  return row;
}

}  // namespace

Report build_report(const std::vector<RunRecord>& records,
                    const std::map<std::string, Tier>* tiers) {
  // Stable accumulation order: sample_id within method.
  std::map<Method, std::vector<const RunRecord*>> by_method;
  for (const RunRecord& r : records) by_method[r.method].push_back(&r);
  for (auto& [method, list] : by_method) {
    std::sort(list.begin(), list.end(),
              [](const RunRecord* a, const RunRecord* b) {
                return a->sample_id < b->sample_id;
              });
  }

  Report report;
  for (Method method : kMethodOrder) {
    auto it = by_method.find(method);
    if (it == by_method.end()) continue;
    report.rows.push_back(make_row(method, "", it->second));
  }

  if (tiers) {
    for (Tier tier : {Tier::HighHigh, Tier::LowLow, Tier::HHPL}) {
      for (Method method : kMethodOrder) {
        auto it = by_method.find(method);
        if (it == by_method.end()) continue;
        std::vector<const RunRecord*> subset;
        for (const RunRecord* rec : it->second) {
          auto t = tiers->find(rec->sample_id);
          if (t != tiers->end() && t->second == tier) subset.push_back(rec);
        }
        if (!subset.empty()) {
          report.rows.push_back(make_row(method, to_string(tier), subset));
        }
      }
    }
  }
  return report;
}

std::string format_report_text(const Report& report) {
  std::ostringstream out;
  auto print_header = [&] {
    out << std::left << std::setw(14) << "Method" << std::right
        << std::setw(8) << "Records" << std::setw(12) << "Product AC"
        << std::setw(12) << "Product SC" << std::setw(12) << "History AC"
        << std::setw(12) << "History SC" << std::setw(12) << "User AC"
        << std::setw(12) << "User SC" << std::setw(12) << "AVG" << "\n";
  };

  std::vector<std::string> coverage_notes;
  std::string current_group;
  bool first = true;
  for (const ReportRow& row : report.rows) {
    if (first || row.group != current_group) {
      if (!first) out << "\n";
      if (!row.group.empty()) out << "[tier " << row.group << "]\n";
      print_header();
      current_group = row.group;
      first = false;
    }
    out << std::left << std::setw(14) << display_name(row.method) << std::right
        << std::setw(8) << row.records;
    for (int a = 0; a < 6; ++a) {
      if (row.axes[a]) {
        out << std::setw(12) << std::fixed << std::setprecision(2)
            << row.axes[a]->mean;
        if (row.axes[a]->count < row.records) {
          coverage_notes.push_back(
              (row.group.empty() ? std::string{} : "[" + row.group + "] ") +
              display_name(row.method) + " " + kAxisNames[a] + " covers " +
              std::to_string(row.axes[a]->count) + "/" +
              std::to_string(row.records) + " records");
        }
      } else {
        out << std::setw(12) << "-";
      }
    }
    if (row.avg) {
      out << std::setw(12) << std::fixed << std::setprecision(2) << *row.avg;
    } else {
      out << std::setw(12) << "-";
    }
    out << "\n";
  }
  if (report.rows.empty()) out << "(no scored records)\n";

  for (const std::string& note : coverage_notes) {
    out << "coverage: " << note << "\n";
  }
  return out.str();
}

std::string format_report_json(const Report& report) {
  json rows = json::array();
  for (const ReportRow& row : report.rows) {
    json r{{"method", to_string(row.method)},
           {"group", row.group},
           {"records", row.records}};
    for (int a = 0; a < 6; ++a) {
      if (row.axes[a]) {
        r[kAxisNames[a]] = {{"mean", row.axes[a]->mean},
                            {"count", row.axes[a]->count}};
      }
    }
    if (row.avg) r["avg"] = *row.avg;
    rows.push_back(std::move(r));
  }
  return json{{"rows", std::move(rows)}}.dump(2) + "\n";
}

int cmd_report(AppContext& ctx, const std::filesystem::path& dataset_path,
               bool by_tier, const std::filesystem::path& json_out,
               std::ostream& out, std::ostream& log) {
  std::vector<RunRecord> records;
  for (auto& [key, rec] : ctx.store().load_latest()) {
    records.push_back(std::move(rec));
  }

  std::map<std::string, Tier> tiers;
  if (by_tier) {
    if (dataset_path.empty()) {
      log << "error: per-tier breakdown needs the dataset path\n";
      return kExitHard;
    }
    for (const Sample& s : load_dataset(dataset_path, log)) {
      tiers[s.sample_id] = s.tier;
    }
  }

  Report report = build_report(records, by_tier ? &tiers : nullptr);
  out << format_report_text(report);
  if (!json_out.empty()) {
    std::ofstream jout(json_out);
    if (!jout) {
      log << "error: cannot write report JSON to " << json_out << "\n";
      return kExitHard;
    }
    jout << format_report_json(report);
  }
  return kExitOk;
}

}  // namespace rehearsal
