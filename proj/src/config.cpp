#include "rehearsal/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rehearsal/errors.hpp"

namespace rehearsal {

using nlohmann::json;

std::string to_string(JudgeScale scale) {
  return scale == JudgeScale::OneToFive ? "one_to_five" : "zero_to_hundred";
}

namespace {

JudgeScale scale_from_string(const std::string& s) {
  if (s == "one_to_five") return JudgeScale::OneToFive;
  if (s == "zero_to_hundred") return JudgeScale::ZeroToHundred;
  throw ConfigError("unknown judge scale: " + s);
}

BackendSpec backend_from_json(const std::string& name, const json& j) {
  BackendSpec spec;
  spec.kind = j.value("kind", std::string{"http"});
  if (spec.kind != "http" && spec.kind != "scripted") {
    throw ConfigError("backend '" + name + "' has unknown kind: " + spec.kind);
  }
  spec.config.name = name;
  spec.config.endpoint_url = j.value("endpoint_url", std::string{});
  spec.config.completion_path =
      j.value("completion_path", std::string{"/v1/chat/completions"});
  spec.config.model_name = j.value("model_name", std::string{});
  spec.config.auth_header = j.value("auth_header", std::string{"Authorization"});
  spec.config.max_input_chars = j.value("max_input_chars", std::size_t{120000});
  spec.config.request_timeout =
      std::chrono::milliseconds(j.value("request_timeout_ms", 60000));
  spec.config.max_retries = j.value("max_retries", 3);
  spec.config.parallelism = j.value("parallelism", 1);
  spec.config.backoff_base =
      std::chrono::milliseconds(j.value("backoff_base_ms", 1000));
  spec.api_key_env = j.value("api_key_env", std::string{});
  spec.mock_script = j.value("mock_script", std::string{});
  return spec;
}

json backend_to_json(const BackendSpec& spec) {
  return json{{"kind", spec.kind},
              {"endpoint_url", spec.config.endpoint_url},
              {"completion_path", spec.config.completion_path},
              {"model_name", spec.config.model_name},
              {"auth_header", spec.config.auth_header},
              {"max_input_chars", spec.config.max_input_chars},
              {"request_timeout_ms", spec.config.request_timeout.count()},
              {"max_retries", spec.config.max_retries},
              {"parallelism", spec.config.parallelism},
              {"backoff_base_ms", spec.config.backoff_base.count()},
              {"api_key_env", spec.api_key_env},
              {"mock_script", spec.mock_script}};
}

}  // namespace

AppConfig default_config() {
  AppConfig cfg;
  BackendSpec spec;
  spec.config.name = "default";
  cfg.backends["default"] = spec;
  for (const char* role : kRoleNames) cfg.roles[role] = "default";
  return cfg;
}

AppConfig config_from_json(const std::string& content) {
  json j = json::parse(content, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("config is not a JSON object");
  }

  AppConfig cfg;
  cfg.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("backends")) {
    for (const auto& [name, spec] : j.at("backends").items()) {
      cfg.backends[name] = backend_from_json(name, spec);
    }
  }
  if (cfg.backends.empty()) {
    cfg.backends["default"] = BackendSpec{};
    cfg.backends["default"].config.name = "default";
  }

  for (const char* role : kRoleNames) cfg.roles[role] = "default";
  if (j.contains("roles")) {
    for (const auto& [role, backend] : j.at("roles").items()) {
      cfg.roles[role] = backend.get<std::string>();
    }
  }
  for (const auto& [role, backend] : cfg.roles) {
    if (!cfg.backends.count(backend)) {
      throw ConfigError("role '" + role + "' points at unknown backend '" +
                        backend + "'");
    }
  }

  if (j.contains("loop")) {
    const json& l = j.at("loop");
    cfg.loop.practice_rounds = l.value("practice_rounds", 3);
    cfg.loop.batch_pass_early = l.value("batch_pass_early", 0.95);
    cfg.loop.batch_pass_late = l.value("batch_pass_late", 0.85);
    cfg.loop.early_iteration_bound = l.value("early_iteration_bound", 5);
    cfg.loop.max_iterations = l.value("max_iterations", 15);
    cfg.loop.rewrite_candidates = l.value("rewrite_candidates", 5);
  }
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    cfg.filter.product_char_budget =
        f.value("product_char_budget", std::size_t{10000});
    cfg.filter.removal_retry_soft = f.value("removal_retry_soft", 5);
    cfg.filter.removal_retry_hard = f.value("removal_retry_hard", 8);
    cfg.filter.history_retry = f.value("history_retry", 5);
  }
  if (j.contains("judge")) {
    const json& jd = j.at("judge");
    cfg.judge.scale =
        scale_from_string(jd.value("scale", std::string{"zero_to_hundred"}));
    cfg.judge.parse_retries = jd.value("parse_retries", 3);
  }
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    cfg.paths.dataset = p.value("dataset", std::string{});
    cfg.paths.run_store = p.value("run_store", std::string{"runs.jsonl"});
    cfg.paths.template_overrides =
        p.value("template_overrides", std::string{});
  }
  if (j.contains("corpus_fields")) {
    const json& f = j.at("corpus_fields");
    cfg.corpus_fields.reviewer = f.value("reviewer", std::string{"reviewerID"});
    cfg.corpus_fields.product = f.value("product", std::string{"asin"});
    cfg.corpus_fields.text = f.value("text", std::string{"reviewText"});
    cfg.corpus_fields.category = f.value("category", std::string{"category"});
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string save_config(const AppConfig& cfg) {
  json backends = json::object();
  for (const auto& [name, spec] : cfg.backends) {
    backends[name] = backend_to_json(spec);
  }
  json j{{"seed", cfg.seed},
         {"backends", std::move(backends)},
         {"roles", cfg.roles},
         {"loop",
          {{"practice_rounds", cfg.loop.practice_rounds},
           {"batch_pass_early", cfg.loop.batch_pass_early},
           {"batch_pass_late", cfg.loop.batch_pass_late},
           {"early_iteration_bound", cfg.loop.early_iteration_bound},
           {"max_iterations", cfg.loop.max_iterations},
           {"rewrite_candidates", cfg.loop.rewrite_candidates}}},
         {"filter",
          {{"product_char_budget", cfg.filter.product_char_budget},
           {"removal_retry_soft", cfg.filter.removal_retry_soft},
           {"removal_retry_hard", cfg.filter.removal_retry_hard},
           {"history_retry", cfg.filter.history_retry}}},
         {"judge",
          {{"scale", to_string(cfg.judge.scale)},
           {"parse_retries", cfg.judge.parse_retries}}},
         {"paths",
          {{"dataset", cfg.paths.dataset},
           {"run_store", cfg.paths.run_store},
           {"template_overrides", cfg.paths.template_overrides}}},
         {"corpus_fields",
          {{"reviewer", cfg.corpus_fields.reviewer},
           {"product", cfg.corpus_fields.product},
           {"text", cfg.corpus_fields.text},
           {"category", cfg.corpus_fields.category}}}};
  return j.dump(2) + "\n";
}

}  // namespace rehearsal
