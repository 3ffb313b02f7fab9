#include "rehearsal/gateway.hpp"

#include <atomic>
#include <thread>

#include "rehearsal/errors.hpp"
#include "rehearsal/rng.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

std::string to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

nlohmann::json build_chat_payload(const std::string& model,
                                  const std::vector<ChatMessage>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return nlohmann::json{{"model", model}, {"messages", std::move(msgs)}};
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)) {
  if (!backend_) throw ConfigError("gateway requires a backend");
  if (cfg_.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (cfg_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  sleeper_ = [](std::chrono::milliseconds d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
  };
}

void Gateway::set_sleeper(
    std::function<void(std::chrono::milliseconds)> sleeper) {
  sleeper_ = std::move(sleeper);
}

std::size_t Gateway::input_chars(const std::vector<ChatMessage>& messages) {
  std::size_t n = 0;
  for (const ChatMessage& m : messages) n += text::utf8_length(m.content);
  return n;
}

std::chrono::milliseconds Gateway::backoff_delay(int attempt) {
  // base * 2^attempt with ±20% jitter; timing-only, so the engine is
  // thread-local and does not participate in run determinism.
  thread_local std::mt19937_64 engine(mix_seed(cfg_.seed, "backoff_jitter"));
  double factor = static_cast<double>(1ull << attempt);
  double jitter = 0.8 + (static_cast<double>(engine() % 1000) / 1000.0) * 0.4;
  auto ms = static_cast<std::int64_t>(
      static_cast<double>(cfg_.backoff_base.count()) * factor * jitter);
  return std::chrono::milliseconds(ms);
}

LlmResponse Gateway::complete(const std::vector<ChatMessage>& messages,
                              const std::string& call_tag) {
  if (messages.empty()) {
    throw PreconditionError("complete requires at least one message");
  }

  // Client-side context proxy: refuse locally rather than burn a request.
  if (input_chars(messages) > cfg_.max_input_chars) {
    LlmResponse degenerate;
    degenerate.content = kDegenerateContent;
    degenerate.model_name = cfg_.model_name;
    degenerate.degenerate = true;
    return degenerate;
  }

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(backoff_delay(attempt - 1));
    try {
      return backend_->complete_raw(messages, call_tag);
    } catch (const detail::ContextLengthError&) {
      // Degenerate by provider verdict; never retried.
      LlmResponse degenerate;
      degenerate.content = kDegenerateContent;
      degenerate.model_name = cfg_.model_name;
      degenerate.degenerate = true;
      return degenerate;
    } catch (const detail::TransientError& e) {
      last_error = e.what();
    }
  }
  throw GatewayError("backend failed after " +
                     std::to_string(cfg_.max_retries + 1) + " attempts (" +
                     call_tag + "): " + last_error);
}

std::vector<CallOutcome> Gateway::complete_many(
    const std::vector<BatchItem>& batch) {
  if (batch.empty()) {
    throw PreconditionError("complete_many requires a non-empty batch");
  }

  std::vector<CallOutcome> results(batch.size());
  auto run_one = [&](std::size_t i) {
    try {
      results[i].response = complete(batch[i].messages, batch[i].call_tag);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  };

  std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.parallelism),
                            batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) run_one(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < batch.size();
           i = next.fetch_add(1)) {
        run_one(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

}  // namespace rehearsal
