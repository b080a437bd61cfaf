#include <chrono>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/llm.hpp"
#include "promptopt/remote_backend.hpp"

namespace promptopt {
namespace {

using std::chrono::milliseconds;
using TimePoint = std::chrono::steady_clock::time_point;

// Manual clock: sleep() advances time instead of blocking.
struct FakeTime {
  TimePoint now{};
  std::vector<milliseconds> sleeps;

  Clock clock() {
    return Clock{[this] { return now; }, [this](milliseconds d) {
                   sleeps.push_back(d);
                   now += d;
                 }};
  }
};

struct ScriptedTransport : HttpTransport {
  std::deque<HttpResult> replies;
  std::vector<std::string> bodies;
  std::vector<HttpHeaders> headers;
  std::vector<std::string> urls;

  HttpResult post(const std::string& url, const std::string& body, const HttpHeaders& h) override {
    urls.push_back(url);
    bodies.push_back(body);
    headers.push_back(h);
    if (replies.empty()) return HttpResult{200, completion("default")};
    auto r = replies.front();
    replies.pop_front();
    return r;
  }

  static std::string completion(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
  }
};

RemoteConfig keyed_config() {
  RemoteConfig cfg;
  cfg.api_key = "sk-test";
  cfg.api_base = "http://localhost:9/v1";
  cfg.backoff_base_ms = 100;
  cfg.requests_per_minute = 1000;
  return cfg;
}

ChatRequest simple_request() {
  ChatRequest req;
  req.system_text = "Rank these.";
  req.user_text = "Current session interactions: [1.\"A\"]";
  return req;
}

struct Harness {
  FakeTime time;
  ScriptedTransport* transport = nullptr;
  std::unique_ptr<RemoteBackend> backend;

  explicit Harness(RemoteConfig cfg, std::deque<HttpResult> replies = {}) {
    auto t = std::make_unique<ScriptedTransport>();
    t->replies = std::move(replies);
    transport = t.get();
    backend = std::make_unique<RemoteBackend>(std::move(cfg), std::move(t), time.clock(), 7);
  }
};

TEST(BackendKindTest, RoundTrip) {
  for (auto k : {BackendKind::mock, BackendKind::remote}) EXPECT_EQ(parse_backend_kind(to_string(k)), k);
  EXPECT_THROW(parse_backend_kind("openai"), std::invalid_argument);
}

TEST(ChatRequestTest, EmptyTurnsRejected) {
  auto req = simple_request();
  EXPECT_NO_THROW(check_request(req));
  req.system_text.clear();
  EXPECT_THROW(check_request(req), std::invalid_argument);
  req = simple_request();
  req.user_text.clear();
  EXPECT_THROW(check_request(req), std::invalid_argument);
  req = simple_request();
  req.temperature = -0.5;
  EXPECT_THROW(check_request(req), std::invalid_argument);
}

TEST(RemoteBackendTest, SuccessReturnsContent) {
  Harness h(keyed_config(), {HttpResult{200, ScriptedTransport::completion("1. \"A\"")}});
  const auto res = h.backend->complete(simple_request());
  EXPECT_EQ(res.text, "1. \"A\"");
  EXPECT_EQ(res.attempt_count, 1);
  EXPECT_EQ(res.backend, BackendKind::remote);
  ASSERT_EQ(h.transport->urls.size(), 1u);
  EXPECT_EQ(h.transport->urls[0], "http://localhost:9/v1/chat/completions");
  bool saw_auth = false;
  for (const auto& [k, v] : h.transport->headers[0]) saw_auth |= (k == "Authorization" && v == "Bearer sk-test");
  EXPECT_TRUE(saw_auth);
}

TEST(RemoteBackendTest, RetriesRateLimitThenSucceeds) {
  Harness h(keyed_config(), {HttpResult{429, "slow down"}, HttpResult{200, ScriptedTransport::completion("ok")}});
  const auto res = h.backend->complete(simple_request());
  EXPECT_EQ(res.text, "ok");
  EXPECT_EQ(res.attempt_count, 2);
  EXPECT_EQ(h.backend->calls_made(), 2);
  ASSERT_EQ(h.time.sleeps.size(), 1u);
  // First backoff is base * [0.5, 1.5).
  EXPECT_GE(h.time.sleeps[0].count(), 50);
  EXPECT_LT(h.time.sleeps[0].count(), 150);
}

TEST(RemoteBackendTest, ServerErrorsAndConnectionFailuresAreTransient) {
  Harness h(keyed_config(), {HttpResult{503, ""}, HttpResult{0, "refused"}, HttpResult{408, ""},
                             HttpResult{200, ScriptedTransport::completion("fine")}});
  EXPECT_EQ(h.backend->complete(simple_request()).attempt_count, 4);
}

TEST(RemoteBackendTest, BackoffGrowsExponentially) {
  auto cfg = keyed_config();
  cfg.max_attempts = 4;
  Harness h(cfg, {HttpResult{500, ""}, HttpResult{500, ""}, HttpResult{500, ""}, HttpResult{500, ""}});
  EXPECT_THROW(h.backend->complete(simple_request()), TransportError);
  ASSERT_EQ(h.time.sleeps.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const double base = 100.0 * (1 << i);
    EXPECT_GE(h.time.sleeps[i].count(), static_cast<long>(0.5 * base) - 1);
    EXPECT_LT(h.time.sleeps[i].count(), static_cast<long>(1.5 * base) + 1);
  }
}

TEST(RemoteBackendTest, ExhaustedAttemptsRaiseTransportError) {
  auto cfg = keyed_config();
  cfg.max_attempts = 3;
  Harness h(cfg, {HttpResult{429, ""}, HttpResult{429, ""}, HttpResult{429, ""}});
  EXPECT_THROW(h.backend->complete(simple_request()), TransportError);
  EXPECT_EQ(h.transport->bodies.size(), 3u);
}

TEST(RemoteBackendTest, ClientErrorIsNotRetried) {
  Harness h(keyed_config(), {HttpResult{400, "bad request"}});
  EXPECT_THROW(h.backend->complete(simple_request()), TransportError);
  EXPECT_EQ(h.transport->bodies.size(), 1u);
}

TEST(RemoteBackendTest, UnauthorizedIsAuthError) {
  Harness h(keyed_config(), {HttpResult{401, "no"}});
  EXPECT_THROW(h.backend->complete(simple_request()), AuthError);
  EXPECT_EQ(h.transport->bodies.size(), 1u);
}

TEST(RemoteBackendTest, MissingKeyIsAuthErrorWithoutNetwork) {
  auto cfg = keyed_config();
  cfg.api_key.clear();
  Harness h(cfg);
  EXPECT_THROW(h.backend->complete(simple_request()), AuthError);
  EXPECT_TRUE(h.transport->bodies.empty());
}

TEST(RemoteBackendTest, BudgetCountsAttempts) {
  auto cfg = keyed_config();
  cfg.call_budget = 3;
  Harness h(cfg, {HttpResult{500, ""}, HttpResult{200, ScriptedTransport::completion("a")}});
  EXPECT_NO_THROW(h.backend->complete(simple_request()));
  EXPECT_NO_THROW(h.backend->complete(simple_request()));
  EXPECT_THROW(h.backend->complete(simple_request()), BudgetExceeded);
  EXPECT_EQ(h.backend->calls_made(), 3);
}

TEST(RemoteBackendTest, MalformedCompletionIsTransportError) {
  Harness h(keyed_config(), {HttpResult{200, "<html>"}});
  EXPECT_THROW(h.backend->complete(simple_request()), TransportError);
  Harness h2(keyed_config(), {HttpResult{200, R"({"choices": []})"}});
  EXPECT_THROW(h2.backend->complete(simple_request()), TransportError);
}

TEST(RemoteBackendTest, RequestBodyShape) {
  auto cfg = keyed_config();
  cfg.model = "gpt-test";
  cfg.max_output_tokens = 256;
  auto req = simple_request();
  req.temperature = 0.7;
  req.max_output_tokens = 2048;

  auto body = nlohmann::json::parse(RemoteBackend::request_body(cfg, req));
  EXPECT_EQ(body["model"], "gpt-test");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], req.system_text);
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], req.user_text);
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 256);
  EXPECT_FALSE(body.contains("response_format"));

  req.json_mode = true;
  req.max_output_tokens = 100;
  body = nlohmann::json::parse(RemoteBackend::request_body(cfg, req));
  EXPECT_EQ(body["response_format"]["type"], "json_object");
  EXPECT_EQ(body["max_tokens"], 100);
}

TEST(RemoteBackendTest, NullContentIsEmpty) {
  EXPECT_EQ(RemoteBackend::extract_content(R"({"choices":[{"message":{"content":null}}]})"), "");
}

TEST(RateLimiterTest, NeverExceedsPerMinuteInAnyWindow) {
  FakeTime time;
  RateLimiter limiter(5, time.clock());
  std::vector<TimePoint> grants;
  for (int i = 0; i < 23; ++i) {
    limiter.acquire();
    grants.push_back(time.now);
    time.now += milliseconds(700 + 1900 * (i % 3));
  }
  for (std::size_t i = 0; i < grants.size(); ++i) {
    int in_window = 0;
    for (std::size_t j = i; j < grants.size() && grants[j] - grants[i] < std::chrono::minutes(1); ++j) ++in_window;
    EXPECT_LE(in_window, 5) << "window starting at grant " << i;
  }
  EXPECT_FALSE(time.sleeps.empty());
}

TEST(RateLimiterTest, DoesNotWaitUnderTheLimit) {
  FakeTime time;
  RateLimiter limiter(3, time.clock());
  for (int i = 0; i < 3; ++i) limiter.acquire();
  EXPECT_TRUE(time.sleeps.empty());
  limiter.acquire();
  ASSERT_EQ(time.sleeps.size(), 1u);
  EXPECT_EQ(time.sleeps[0], std::chrono::minutes(1));
}

TEST(RateLimiterTest, RejectsNonPositiveRate) {
  FakeTime time;
  EXPECT_THROW(RateLimiter(0, time.clock()), std::invalid_argument);
}

TEST(RemoteBackendTest, RateLimitAppliesAcrossCalls) {
  auto cfg = keyed_config();
  cfg.requests_per_minute = 2;
  Harness h(cfg);
  for (int i = 0; i < 5; ++i) h.backend->complete(simple_request());
  // Five calls at two per minute need two full-window waits.
  EXPECT_GE(h.time.now - TimePoint{}, std::chrono::minutes(2));
}

}  // namespace
}  // namespace promptopt
