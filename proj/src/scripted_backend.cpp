#include "rehearsal/scripted_backend.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "rehearsal/errors.hpp"
#include "rehearsal/rng.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

namespace {

std::string concat_contents(const std::vector<ChatMessage>& messages) {
  std::string all;
  for (const ChatMessage& m : messages) {
    all += m.content;
    all += '\n';
  }
  return all;
}

bool rule_matches(const ScriptedRule& rule, const std::string& tag,
                  const std::vector<ChatMessage>& messages,
                  const std::string& joined) {
  if (!rule.tag.empty() && rule.tag != tag) return false;
  if (!rule.contains.empty() && !text::contains(joined, rule.contains)) {
    return false;
  }
  for (const std::string& needle : rule.contains_all) {
    if (!text::contains(joined, needle)) return false;
  }
  if (rule.predicate && !rule.predicate(messages)) return false;
  return true;
}

}  // namespace

void ScriptedBackend::add_rule(ScriptedRule rule) {
  rules_.push_back(std::move(rule));
  consumed_.push_back(0);
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_script_file(
    const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read mock script: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed mock script " + path.string() + ": " +
                      e.what());
  }
  if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
  auto backend = std::make_shared<ScriptedBackend>(seed);
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    ScriptedRule rule;
    rule.tag = r.value("tag", std::string{});
    rule.contains = r.value("contains", std::string{});
    if (r.contains("contains_all")) {
      rule.contains_all = r.at("contains_all").get<std::vector<std::string>>();
    }
    if (r.contains("response")) {
      rule.responses.push_back(r.at("response").get<std::string>());
    }
    if (r.contains("responses")) {
      auto list = r.at("responses").get<std::vector<std::string>>();
      rule.responses.insert(rule.responses.end(), list.begin(), list.end());
    }
    rule.latency_ms = r.value("latency_ms", 0);
    rule.fail_times = r.value("fail_times", 0);
    rule.context_length_error = r.value("context_length_error", false);
    backend->add_rule(std::move(rule));
  }
  return backend;
}

LlmResponse ScriptedBackend::complete_raw(
    const std::vector<ChatMessage>& messages, const std::string& call_tag) {
  std::string joined = concat_contents(messages);

  ScriptedRule* rule = nullptr;
  std::size_t matched_index = 0;
  std::size_t ledger_index = 0;
  int latency_ms = 0;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (rule_matches(rules_[i], call_tag, messages, joined)) {
        rule = &rules_[i];
        matched_index = consumed_[i]++;
        break;
      }
    }
    if (rule) {
      ScriptedCall call;
      call.tag = call_tag;
      call.messages = messages;
      call.start = std::chrono::steady_clock::now();
      call.concurrent_at_start = ++in_flight_;
      high_water_ = std::max(high_water_, in_flight_);
      ledger_index = ledger_.size();
      ledger_.push_back(std::move(call));
      latency_ms = rule->latency_ms;
    }
  }

  if (!rule) {
    throw ConfigError("no scripted rule matches call tag '" + call_tag + "'");
  }

  if (latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms));
  }

  std::string content;
  bool fail = false;
  bool context_error = false;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ledger_[ledger_index].end = std::chrono::steady_clock::now();
    --in_flight_;

    if (rule->context_length_error) {
      context_error = true;
    } else if (static_cast<int>(matched_index) < rule->fail_times) {
      fail = true;
    } else if (rule->generator) {
      std::uint64_t h = fnv1a64(joined, mix_seed(seed_, call_tag));
      std::mt19937_64 engine(h);
      content = rule->generator(messages, engine);
    } else if (!rule->responses.empty()) {
      std::size_t effective = matched_index - rule->fail_times;
      std::size_t idx = std::min(effective, rule->responses.size() - 1);
      content = rule->responses[idx];
    }
  }

  if (context_error) {
    throw detail::ContextLengthError("scripted context-length rejection");
  }
  if (fail) {
    throw detail::TransientError("scripted transient failure");
  }

  LlmResponse resp;
  resp.content = std::move(content);
  resp.model_name = "scripted";
  resp.prompt_tokens = static_cast<std::int64_t>(text::utf8_length(joined) / 4);
  resp.completion_tokens =
      static_cast<std::int64_t>(text::utf8_length(resp.content) / 4);
  return resp;
}

std::vector<ScriptedCall> ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return ledger_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return ledger_.size();
}

std::size_t ScriptedBackend::call_count(const std::string& tag) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t n = 0;
  for (const ScriptedCall& c : ledger_) {
    if (c.tag == tag) ++n;
  }
  return n;
}

std::map<std::string, std::size_t> ScriptedBackend::counts_by_tag() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::map<std::string, std::size_t> counts;
  for (const ScriptedCall& c : ledger_) ++counts[c.tag];
  return counts;
}

int ScriptedBackend::concurrency_high_water() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return high_water_;
}

void ScriptedBackend::reset_ledger() {
  std::lock_guard<std::mutex> lock(mutex_);
  ledger_.clear();
  in_flight_ = 0;
  high_water_ = 0;
}

}  // namespace rehearsal
