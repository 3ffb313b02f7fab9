#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rehearsal/domain.hpp"

namespace rehearsal {

/// Per-backend settings. Sampling parameters (temperature, top-p, ...)
/// are deliberately absent: requests never set them, so the provider's
/// defaults apply.
struct BackendConfig {
  std::string name = "default";
  std::string endpoint_url;
  std::string completion_path = "/v1/chat/completions";
  std::string model_name;
  std::string api_key;
  std::string auth_header = "Authorization";  // sent as "Bearer <key>"
  std::size_t max_input_chars = 120000;       // character proxy for context
  std::chrono::milliseconds request_timeout{60000};
  int max_retries = 3;
  int parallelism = 1;
  std::chrono::milliseconds backoff_base{1000};  // doubles per retry, ±20% jitter
  std::uint64_t seed = 0;                        // scripted backends + jitter
};

/// One raw attempt against a model. Implementations throw
/// detail::TransientError for retryable failures and
/// detail::ContextLengthError for provider-side context rejections.
class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  virtual LlmResponse complete_raw(const std::vector<ChatMessage>& messages,
                                   const std::string& call_tag) = 0;
};

struct BatchItem {
  std::vector<ChatMessage> messages;
  std::string call_tag;
};

/// Per-item result of a batch; errors never abort sibling items.
struct CallOutcome {
  std::optional<LlmResponse> response;
  std::string error;

  bool ok() const { return response.has_value(); }
};

/// Uniform access to one backend: client-side character budget, retry
/// with exponential backoff on transient failures, and context-length
/// degeneracy mapped to the literal "None" response (never retried).
class Gateway {
public:
  Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig cfg);

  LlmResponse complete(const std::vector<ChatMessage>& messages,
                       const std::string& call_tag);

  /// Results are positionally aligned with the batch; at most
  /// `parallelism` requests are in flight at once.
  std::vector<CallOutcome> complete_many(const std::vector<BatchItem>& batch);

  const BackendConfig& config() const { return cfg_; }
  ChatBackend& backend() { return *backend_; }

  /// Total characters the messages contribute to the input budget.
  static std::size_t input_chars(const std::vector<ChatMessage>& messages);

  /// Test hook: replaces the inter-retry sleep.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

private:
  std::chrono::milliseconds backoff_delay(int attempt);

  std::shared_ptr<ChatBackend> backend_;
  BackendConfig cfg_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

/// Wire payload for a chat-completions request. Kept as a free function
/// so tests can assert no sampling parameters are ever set.
nlohmann::json build_chat_payload(const std::string& model,
                                  const std::vector<ChatMessage>& messages);

std::string to_string(Role r);

}  // namespace rehearsal
