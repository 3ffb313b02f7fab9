#include <doctest.h>

#include <memory>
#include <string>

#include "rehearsal/errors.hpp"
#include "rehearsal/gateway.hpp"
#include "rehearsal/http_backend.hpp"
#include "rehearsal/scripted_backend.hpp"

using namespace rehearsal;

namespace {

BackendConfig test_config() {
  BackendConfig cfg;
  cfg.model_name = "scripted";
  cfg.max_input_chars = 100000;
  cfg.max_retries = 3;
  cfg.parallelism = 1;
  cfg.backoff_base = std::chrono::milliseconds(0);
  return cfg;
}

std::vector<ChatMessage> user_says(const std::string& content) {
  return {{Role::User, content}};
}

}  // namespace

TEST_CASE("scripted rule responds verbatim by tag") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule(
      {.tag = "supervisor",
       .responses = {"## Thought\nok\n## Suggestions\nNo suggestions"}});
  Gateway gw(backend, test_config());
  LlmResponse r = gw.complete(user_says("anything"), "supervisor");
  CHECK(r.content == "## Thought\nok\n## Suggestions\nNo suggestions");
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("input over the character budget degenerates without a call") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"should never be returned"}});
  BackendConfig cfg = test_config();
  cfg.max_input_chars = 50;
  Gateway gw(backend, cfg);

  LlmResponse r = gw.complete(user_says(std::string(51, 'x')), "any");
  CHECK(r.degenerate);
  CHECK(r.content == "None");
  CHECK(backend->call_count() == 0);

  // Exactly at the budget goes through.
  LlmResponse ok = gw.complete(user_says(std::string(50, 'x')), "any");
  CHECK_FALSE(ok.degenerate);
  CHECK(backend->call_count() == 1);
}

TEST_CASE("seeded generator rules are deterministic per input") {
  auto make_gateway = [](std::uint64_t seed) {
    auto backend = std::make_shared<ScriptedBackend>(seed);
    backend->add_rule(
        {.generator = [](const std::vector<ChatMessage>&,
                         std::mt19937_64& rng) {
          return "pick-" + std::to_string(rng() % 1000);
        }});
    return std::make_pair(backend, Gateway(backend, test_config()));
  };

  auto [b1, gw1] = make_gateway(7);
  std::string first = gw1.complete(user_says("identical input"), "t").content;
  std::string second = gw1.complete(user_says("identical input"), "t").content;
  CHECK(first == second);

  auto [b2, gw2] = make_gateway(7);
  CHECK(gw2.complete(user_says("identical input"), "t").content == first);

  auto [b3, gw3] = make_gateway(8);
  CHECK(gw3.complete(user_says("identical input"), "t").content != first);
}

TEST_CASE("batch results align with input order") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.contains = "alpha", .responses = {"A"}});
  backend->add_rule({.contains = "beta", .responses = {"B"}});
  backend->add_rule({.contains = "gamma", .responses = {"C"}});
  Gateway gw(backend, test_config());

  auto results = gw.complete_many({{user_says("alpha"), "t"},
                                   {user_says("beta"), "t"},
                                   {user_says("gamma"), "t"}});
  REQUIRE(results.size() == 3);
  CHECK(results[0].response->content == "A");
  CHECK(results[1].response->content == "B");
  CHECK(results[2].response->content == "C");
}

TEST_CASE("a failing batch item does not abort its siblings") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.contains = "alpha", .responses = {"A"}});
  backend->add_rule({.contains = "gamma", .responses = {"C"}});
  Gateway gw(backend, test_config());

  auto results = gw.complete_many({{user_says("alpha"), "t"},
                                   {user_says("beta"), "t"},
                                   {user_says("gamma"), "t"}});
  CHECK(results[0].ok());
  CHECK_FALSE(results[1].ok());
  CHECK(results[1].error.find("no scripted rule") != std::string::npos);
  CHECK(results[2].ok());
}

TEST_CASE("parallelism=1 strictly serializes calls") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"ok"}, .latency_ms = 5});
  Gateway gw(backend, test_config());

  std::vector<BatchItem> batch(6, BatchItem{user_says("x"), "t"});
  gw.complete_many(batch);

  auto calls = backend->calls();
  REQUIRE(calls.size() == 6);
  CHECK(backend->concurrency_high_water() == 1);
  for (std::size_t i = 1; i < calls.size(); ++i) {
    CHECK(calls[i].start >= calls[i - 1].end);
  }
}

TEST_CASE("in-flight requests never exceed the parallelism bound") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"ok"}, .latency_ms = 10});
  BackendConfig cfg = test_config();
  cfg.parallelism = 3;
  Gateway gw(backend, cfg);

  std::vector<BatchItem> batch(12, BatchItem{user_says("x"), "t"});
  gw.complete_many(batch);
  CHECK(backend->concurrency_high_water() <= 3);
  CHECK(backend->call_count() == 12);
}

TEST_CASE("wire payload never sets sampling parameters") {
  auto payload = build_chat_payload(
      "some-model", {{Role::System, "sys"}, {Role::User, "hello"}});
  CHECK(payload["model"] == "some-model");
  REQUIRE(payload["messages"].size() == 2);
  CHECK(payload["messages"][0]["role"] == "system");
  CHECK(payload["messages"][1]["content"] == "hello");
  CHECK_FALSE(payload.contains("temperature"));
  CHECK_FALSE(payload.contains("top_p"));
  CHECK_FALSE(payload.contains("max_tokens"));
  CHECK(payload.size() == 2);  // nothing beyond model + messages
}

TEST_CASE("transient failures are retried with the configured budget") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"recovered"}, .fail_times = 2});
  Gateway gw(backend, test_config());

  LlmResponse r = gw.complete(user_says("x"), "t");
  CHECK(r.content == "recovered");
  CHECK(backend->call_count() == 3);
}

TEST_CASE("exhausted retries raise a gateway error") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"never"}, .fail_times = 99});
  BackendConfig cfg = test_config();
  cfg.max_retries = 2;
  Gateway gw(backend, cfg);

  CHECK_THROWS_AS(gw.complete(user_says("x"), "t"), GatewayError);
  CHECK(backend->call_count() == 3);  // 1 + 2 retries
}

TEST_CASE("context-length rejections degenerate and are never retried") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.context_length_error = true});
  Gateway gw(backend, test_config());

  LlmResponse r = gw.complete(user_says("x"), "t");
  CHECK(r.degenerate);
  CHECK(r.content == "None");
  CHECK(backend->call_count() == 1);
}

TEST_CASE("empty message list violates the precondition") {
  auto backend = std::make_shared<ScriptedBackend>(0);
  backend->add_rule({.responses = {"x"}});
  Gateway gw(backend, test_config());
  CHECK_THROWS_AS(gw.complete({}, "t"), PreconditionError);
  CHECK_THROWS_AS(gw.complete_many({}), PreconditionError);
}

// ── HttpBackend over a mock transport ───────────────────────────

namespace {

class MockTransport : public HttpTransport {
public:
  struct Exchange {
    std::string path;
    std::map<std::string, std::string> headers;
    std::string body;
  };

  std::vector<Response> queue;
  std::vector<Exchange> exchanges;
  int transient_failures = 0;

  Response post(const std::string& path,
                const std::map<std::string, std::string>& headers,
                const std::string& body) override {
    exchanges.push_back({path, headers, body});
    if (transient_failures > 0) {
      --transient_failures;
      throw rehearsal::detail::TransientError("connection reset");
    }
    if (queue.empty()) throw rehearsal::detail::TransientError("no response");
    Response r = queue.front();
    queue.erase(queue.begin());
    return r;
  }
};

constexpr const char* kChatResponse = R"({
  "model": "served-model",
  "choices": [{"message": {"role": "assistant", "content": "hi there"}}],
  "usage": {"prompt_tokens": 12, "completion_tokens": 5}
})";

}  // namespace

TEST_CASE("http backend sends bearer auth and parses choices/usage") {
  auto transport = std::make_unique<MockTransport>();
  MockTransport* mock = transport.get();
  mock->queue.push_back({200, kChatResponse});

  BackendConfig cfg = test_config();
  cfg.model_name = "req-model";
  cfg.api_key = "sk-test";
  HttpBackend backend(cfg, std::move(transport));

  LlmResponse r = backend.complete_raw(user_says("hello"), "t");
  CHECK(r.content == "hi there");
  CHECK(r.model_name == "served-model");
  CHECK(*r.prompt_tokens == 12);
  CHECK(*r.completion_tokens == 5);

  REQUIRE(mock->exchanges.size() == 1);
  const auto& ex = mock->exchanges[0];
  CHECK(ex.path == "/v1/chat/completions");
  CHECK(ex.headers.at("Authorization") == "Bearer sk-test");
  auto body = nlohmann::json::parse(ex.body);
  CHECK(body["model"] == "req-model");
  CHECK_FALSE(body.contains("temperature"));
}

TEST_CASE("http backend maps 429 to a transient error the gateway retries") {
  auto transport = std::make_unique<MockTransport>();
  MockTransport* mock = transport.get();
  mock->queue.push_back({429, "slow down"});
  mock->queue.push_back({200, kChatResponse});

  BackendConfig cfg = test_config();
  auto backend = std::make_shared<HttpBackend>(cfg, std::move(transport));
  Gateway gw(backend, cfg);

  LlmResponse r = gw.complete(user_says("hello"), "t");
  CHECK(r.content == "hi there");
  CHECK(mock->exchanges.size() == 2);
}

TEST_CASE("http backend maps context-length 400s to the degenerate response") {
  auto transport = std::make_unique<MockTransport>();
  transport->queue.push_back(
      {400, R"({"error": {"code": "context_length_exceeded"}})"});

  BackendConfig cfg = test_config();
  auto backend = std::make_shared<HttpBackend>(cfg, std::move(transport));
  Gateway gw(backend, cfg);

  LlmResponse r = gw.complete(user_says("hello"), "t");
  CHECK(r.degenerate);
  CHECK(r.content == "None");
}

TEST_CASE("http backend surfaces other 4xx as gateway errors") {
  auto transport = std::make_unique<MockTransport>();
  transport->queue.push_back({401, R"({"error": "bad key"})"});

  BackendConfig cfg = test_config();
  cfg.max_retries = 0;
  auto backend = std::make_shared<HttpBackend>(cfg, std::move(transport));
  Gateway gw(backend, cfg);
  CHECK_THROWS_AS(gw.complete(user_says("hello"), "t"), GatewayError);
}

TEST_CASE("malformed completion bodies are gateway errors") {
  auto transport = std::make_unique<MockTransport>();
  transport->queue.push_back({200, "not json at all"});
  BackendConfig cfg = test_config();
  HttpBackend backend(cfg, std::move(transport));
  CHECK_THROWS_AS(backend.complete_raw(user_says("x"), "t"), GatewayError);
}
