#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "rehearsal/app.hpp"
#include "rehearsal/errors.hpp"

namespace {

using namespace rehearsal;

struct CommonFlags {
  std::string config_path;
  std::string mock_script;
  std::vector<std::string> role_overrides;
  std::string run_store;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Config file (JSON)");
  cmd->add_option("--mock-script", flags.mock_script,
                  "Scripted-backend rule file; routes every role to it");
  cmd->add_option("--backend-role", flags.role_overrides,
                  "role=backend mapping override (repeatable)");
  cmd->add_option("--run-store", flags.run_store, "Run store path override");
  cmd->add_option("--seed", flags.seed, "Campaign seed override")
      ->each([&](const std::string&) { flags.seed_set = true; });
}

AppConfig resolve_config(const CommonFlags& flags) {
  AppConfig cfg = flags.config_path.empty() ? default_config()
                                            : load_config(flags.config_path);
  if (flags.seed_set) cfg.seed = flags.seed;
  if (!flags.run_store.empty()) cfg.paths.run_store = flags.run_store;

  if (!flags.mock_script.empty()) {
    BackendSpec mock;
    mock.kind = "scripted";
    mock.mock_script = flags.mock_script;
    mock.config.name = "mock";
    cfg.backends["mock"] = mock;
    for (auto& [role, backend] : cfg.roles) backend = "mock";
  }

  for (const std::string& assignment : flags.role_overrides) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--backend-role expects role=backend, got: " +
                        assignment);
    }
    cfg.roles[assignment.substr(0, eq)] = assignment.substr(eq + 1);
  }
  return cfg;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> methods;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    std::string name = list.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) {
      auto m = method_from_string(name);
      if (!m) throw ConfigError("unknown method: " + name);
      methods.push_back(*m);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (methods.empty()) throw ConfigError("--methods is empty");
  return methods;
}

TierCounts parse_counts(const std::string& spec) {
  if (spec.empty()) return default_tier_counts();
  TierCounts counts;
  std::size_t start = 0;
  while (start < spec.size()) {
    std::size_t comma = spec.find(',', start);
    std::string entry = spec.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("counts entry needs Category=high/low/hhpl: " + entry);
    }
    auto category = category_from_string(entry.substr(0, eq));
    if (!category) throw ConfigError("unknown category: " + entry.substr(0, eq));
    TierTargets targets;
    if (std::sscanf(entry.c_str() + eq + 1, "%d/%d/%d", &targets.high,
                    &targets.low, &targets.hhpl) != 3) {
      throw ConfigError("counts entry needs high/low/hhpl numbers: " + entry);
    }
    counts[*category] = targets;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return counts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized opinion summarization pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  // build-dataset
  auto* build = app.add_subcommand(
      "build-dataset", "Construct a test set from raw review dumps");
  std::vector<std::string> corpus_files;
  std::string dataset_out = "dataset.jsonl";
  std::string manifest_out = "manifest.json";
  std::string counts_spec;
  build->add_option("--corpus", corpus_files, "Line-delimited JSON review files")
      ->required();
  build->add_option("--output", dataset_out, "Dataset output path");
  build->add_option("--manifest", manifest_out, "Manifest output path");
  build->add_option("--counts", counts_spec,
                    "Per-category tier targets, e.g. Clothing=100/50/46,...");
  add_common(build, flags);

  // run
  auto* run = app.add_subcommand("run", "Execute methods over a dataset");
  std::string dataset_path;
  std::string methods_spec = "rehearsal";
  run->add_option("--dataset", dataset_path, "Dataset path (JSONL)");
  run->add_option("--methods", methods_spec,
                  "Comma list: rehearsal,persum,ana_persum,onlysum,sum_perchan");
  add_common(run, flags);

  // evaluate
  auto* evaluate =
      app.add_subcommand("evaluate", "Fill judge scores for finished runs");
  evaluate->add_option("--dataset", dataset_path, "Dataset path (JSONL)");
  add_common(evaluate, flags);

  // report
  auto* report = app.add_subcommand("report", "Aggregate scores per method");
  bool by_tier = false;
  std::string json_out;
  report->add_option("--dataset", dataset_path,
                     "Dataset path (needed for --by-tier)");
  report->add_flag("--by-tier", by_tier, "Add a per-tier breakdown");
  report->add_option("--json", json_out, "Also write a JSON report here");
  add_common(report, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = resolve_config(flags);

    if (build->parsed()) {
      AppContext ctx(cfg);
      std::vector<std::filesystem::path> files(corpus_files.begin(),
                                               corpus_files.end());
      return cmd_build_dataset(ctx, files, parse_counts(counts_spec),
                               dataset_out, manifest_out, std::cerr);
    }

    std::string dataset =
        dataset_path.empty() ? cfg.paths.dataset : dataset_path;
    if (run->parsed()) {
      AppContext ctx(cfg);
      return cmd_run(ctx, dataset, parse_methods(methods_spec), std::cerr);
    }
    if (evaluate->parsed()) {
      AppContext ctx(cfg);
      return cmd_evaluate(ctx, dataset, std::cerr);
    }
    if (report->parsed()) {
      AppContext ctx(cfg);
      return cmd_report(ctx, dataset, by_tier, json_out, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitHard;
  }
  return kExitHard;
}
