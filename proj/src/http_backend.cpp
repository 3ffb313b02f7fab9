#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "rehearsal/http_backend.hpp"

#include <nlohmann/json.hpp>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

namespace {

class HttplibTransport : public HttpTransport {
public:
  HttplibTransport(const std::string& base_url,
                   std::chrono::milliseconds timeout)
      : client_(base_url) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client_.set_connection_timeout(secs.count(), 0);
    client_.set_read_timeout(secs.count(), 0);
    client_.set_write_timeout(secs.count(), 0);
  }

  Response post(const std::string& path,
                const std::map<std::string, std::string>& headers,
                const std::string& body) override {
    httplib::Headers h(headers.begin(), headers.end());
    auto result = client_.Post(path, h, body, "application/json");
    if (!result) {
      throw detail::TransientError("transport failure: " +
                                   httplib::to_string(result.error()));
    }
    return Response{result->status, result->body};
  }

private:
  httplib::Client client_;
};

bool looks_like_context_overflow(const std::string& body) {
  std::string lower = text::lower_ascii(body);
  return text::contains(lower, "context_length") ||
         text::contains(lower, "context length") ||
         text::contains(lower, "maximum context") ||
         text::contains(lower, "too many tokens");
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(
    const std::string& base_url, std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

HttpBackend::HttpBackend(BackendConfig cfg,
                         std::unique_ptr<HttpTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  if (!transport_) throw ConfigError("http backend requires a transport");
}

HttpBackend::HttpBackend(BackendConfig cfg)
    : HttpBackend(cfg, make_httplib_transport(cfg.endpoint_url,
                                              cfg.request_timeout)) {}

LlmResponse HttpBackend::complete_raw(const std::vector<ChatMessage>& messages,
                                      const std::string&) {
  std::map<std::string, std::string> headers;
  if (!cfg_.api_key.empty()) {
    headers[cfg_.auth_header] = "Bearer " + cfg_.api_key;
  }

  std::string body = build_chat_payload(cfg_.model_name, messages).dump();
  HttpTransport::Response r = transport_->post(cfg_.completion_path, headers,
                                               body);

  if (r.status == 408 || r.status == 429 || r.status >= 500) {
    throw detail::TransientError("HTTP " + std::to_string(r.status));
  }
  if (r.status >= 400) {
    if (looks_like_context_overflow(r.body)) {
      throw detail::ContextLengthError("provider rejected input length");
    }
    throw GatewayError("HTTP " + std::to_string(r.status) + ": " +
                       r.body.substr(0, 200));
  }

  nlohmann::json j = nlohmann::json::parse(r.body, nullptr, false);
  if (j.is_discarded()) {
    throw GatewayError("malformed completion response body");
  }
  if (!j.contains("choices") || j["choices"].empty() ||
      !j["choices"][0].contains("message")) {
    throw GatewayError("completion response has no choices");
  }

  LlmResponse resp;
  resp.content = j["choices"][0]["message"].value("content", std::string{});
  resp.model_name = j.value("model", cfg_.model_name);
  if (j.contains("usage")) {
    const auto& usage = j["usage"];
    if (usage.contains("prompt_tokens")) {
      resp.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
    }
    if (usage.contains("completion_tokens")) {
      resp.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
    }
  }
  return resp;
}

}  // namespace rehearsal
