#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "promptopt/config.hpp"
#include "promptopt/llm.hpp"
#include "promptopt/rng.hpp"

namespace promptopt {

struct HttpResult {
  int status = 0;  // 0 when the connection itself failed
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Seam between the chat client and the network.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& url, const std::string& body, const HttpHeaders& headers) = 0;
};

// cpp-httplib client; https URLs go through OpenSSL.
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(int timeout_s = 60) : timeout_s_(timeout_s) {}
  HttpResult post(const std::string& url, const std::string& body, const HttpHeaders& headers) override;

 private:
  int timeout_s_;
};

// Time source and sleep, injectable so retry and rate-limit tests run instantly.
struct Clock {
  std::function<std::chrono::steady_clock::time_point()> now;
  std::function<void(std::chrono::milliseconds)> sleep;

  static Clock system();
};

// Sliding one-minute window: at most `per_minute` grants in any 60 s span.
class RateLimiter {
 public:
  RateLimiter(int per_minute, Clock clock);
  // Blocks (via the clock) until a request may be sent, then records it.
  void acquire();

 private:
  int per_minute_;
  Clock clock_;
  std::deque<std::chrono::steady_clock::time_point> sent_;
};

/// OpenAI-compatible chat-completions client.
///
/// Safe for concurrent use; only the budget and rate-limit bookkeeping is
/// serialized. Each HTTP attempt consumes one unit of the call
/// budget and one rate-limiter grant. 401/403 fail immediately with
/// AuthError; 408, 429, 5xx and connection failures are retried with
/// jittered exponential backoff up to `max_attempts`.
class RemoteBackend final : public ChatBackend {
 public:
  RemoteBackend(RemoteConfig cfg, std::unique_ptr<HttpTransport> transport, Clock clock = Clock::system(),
                std::uint64_t jitter_seed = 0);

  ChatResponse complete(const ChatRequest& req) override;
  BackendKind kind() const noexcept override { return BackendKind::remote; }

  long calls_made() const;

  static std::string request_body(const RemoteConfig& cfg, const ChatRequest& req);
  // Throws TransportError when the body is not a chat completion.
  static std::string extract_content(const std::string& body);

 private:
  RemoteConfig cfg_;
  std::unique_ptr<HttpTransport> transport_;
  Clock clock_;
  RateLimiter limiter_;
  SeededRng jitter_;
  mutable std::mutex mu_;
  long calls_ = 0;
};

}  // namespace promptopt
