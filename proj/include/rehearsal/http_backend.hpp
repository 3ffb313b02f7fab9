#pragma once

#include <map>
#include <memory>
#include <string>

#include "rehearsal/gateway.hpp"

namespace rehearsal {

/// Transport-level view of one HTTP exchange. HttpBackend speaks through
/// this interface so tests can mock the wire without a network.
class HttpTransport {
public:
  struct Response {
    int status = 0;
    std::string body;
  };

  virtual ~HttpTransport() = default;

  /// Throws detail::TransientError on connect/read failures.
  virtual Response post(const std::string& path,
                        const std::map<std::string, std::string>& headers,
                        const std::string& body) = 0;
};

/// Real transport backed by cpp-httplib.
std::unique_ptr<HttpTransport> make_httplib_transport(
    const std::string& base_url, std::chrono::milliseconds timeout);

/// Chat-completions client over any HttpTransport. Request body is
/// {model, messages}; the first choice's message content and the usage
/// block are read back.
class HttpBackend : public ChatBackend {
public:
  HttpBackend(BackendConfig cfg, std::unique_ptr<HttpTransport> transport);

  /// Connects a real transport from cfg.endpoint_url.
  explicit HttpBackend(BackendConfig cfg);

  LlmResponse complete_raw(const std::vector<ChatMessage>& messages,
                           const std::string& call_tag) override;

private:
  BackendConfig cfg_;
  std::unique_ptr<HttpTransport> transport_;
};

}  // namespace rehearsal
