#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rehearsal/dataset.hpp"
#include "rehearsal/gateway.hpp"
#include "rehearsal/judge.hpp"
#include "rehearsal/pipeline.hpp"
#include "rehearsal/retrieval.hpp"

namespace rehearsal {

/// One configured backend. API keys are referenced by environment
/// variable name only; the config file never holds the secret itself.
struct BackendSpec {
  std::string kind = "http";  // "http" or "scripted"
  BackendConfig config;
  std::string api_key_env;
  std::string mock_script;  // rule file for scripted backends
};

inline const char* const kRoleNames[] = {"summarizer", "user_agent",
                                         "supervisor", "filter", "judge"};

struct AppConfig {
  std::uint64_t seed = 0;
  std::map<std::string, BackendSpec> backends;
  std::map<std::string, std::string> roles;  // role -> backend name
  LoopConfig loop;
  FilterConfig filter;
  JudgeConfig judge;
  struct Paths {
    std::string dataset;
    std::string run_store = "runs.jsonl";
    std::string template_overrides;
  } paths;
  FieldMap corpus_fields;
};

/// All five roles aliased to one default backend; the round-trip tests
/// rely on every effective value being spelled out.
AppConfig default_config();

AppConfig config_from_json(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// Emits every effective value, so load(save(cfg)) == cfg.
std::string save_config(const AppConfig& cfg);

std::string to_string(JudgeScale scale);

}  // namespace rehearsal
