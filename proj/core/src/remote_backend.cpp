#include "promptopt/remote_backend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptopt/errors.hpp"

namespace promptopt {

using nlohmann::json;

Clock Clock::system() {
  return Clock{[] { return std::chrono::steady_clock::now(); },
               [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }};
}

RateLimiter::RateLimiter(int per_minute, Clock clock) : per_minute_(per_minute), clock_(std::move(clock)) {
  if (per_minute_ < 1) throw std::invalid_argument("requests_per_minute must be >= 1");
}

void RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::minutes(1);
  auto now = clock_.now();
  while (!sent_.empty() && now - sent_.front() >= kWindow) sent_.pop_front();
  if (static_cast<int>(sent_.size()) >= per_minute_) {
    const auto wait = std::chrono::ceil<std::chrono::milliseconds>(sent_.front() + kWindow - now);
    clock_.sleep(wait);
    now = clock_.now();
    while (!sent_.empty() && now - sent_.front() >= kWindow) sent_.pop_front();
  }
  sent_.push_back(now);
}

HttpResult HttplibTransport::post(const std::string& url, const std::string& body, const HttpHeaders& headers) {
  // Split "scheme://host[:port]/path".
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("malformed url: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  const std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) return HttpResult{0, httplib::to_string(res.error())};
  return HttpResult{res->status, res->body};
}

RemoteBackend::RemoteBackend(RemoteConfig cfg, std::unique_ptr<HttpTransport> transport, Clock clock,
                             std::uint64_t jitter_seed)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      clock_(clock),
      limiter_(cfg_.requests_per_minute, clock),
      jitter_(derive_rng(jitter_seed, "retry-jitter")) {}

long RemoteBackend::calls_made() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string RemoteBackend::request_body(const RemoteConfig& cfg, const ChatRequest& req) {
  json body = {{"model", cfg.model},
               {"messages",
                json::array({{{"role", "system"}, {"content", req.system_text}},
                             {{"role", "user"}, {"content", req.user_text}}})},
               {"temperature", req.temperature},
               {"max_tokens", std::min(req.max_output_tokens, cfg.max_output_tokens)}};
  if (req.json_mode) body["response_format"] = {{"type", "json_object"}};
  return body.dump();
}

std::string RemoteBackend::extract_content(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError("chat endpoint returned non-JSON body");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected chat completion shape: ") + e.what());
  }
}

ChatResponse RemoteBackend::complete(const ChatRequest& req) {
  check_request(req);
  if (cfg_.api_key.empty()) throw AuthError("no API key configured (set PO_API_KEY)");

  const std::string url = cfg_.api_base + (cfg_.api_base.ends_with('/') ? "" : "/") + "chat/completions";
  const std::string body = request_body(cfg_, req);
  const HttpHeaders headers{{"Authorization", "Bearer " + cfg_.api_key}};
  std::string last_error;

  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    {
      // Budget and rate window are shared; the HTTP call itself is not.
      std::lock_guard lock(mu_);
      if (cfg_.call_budget > 0 && calls_ >= cfg_.call_budget) {
        throw BudgetExceeded(fmt::format("remote call budget of {} exhausted", cfg_.call_budget));
      }
      limiter_.acquire();
      ++calls_;
    }
    const auto t0 = clock_.now();
    const HttpResult res = transport_->post(url, body, headers);
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(clock_.now() - t0).count();

    if (res.status == 200) {
      return ChatResponse{extract_content(res.body), latency, BackendKind::remote, attempt};
    }
    if (res.status == 401 || res.status == 403) {
      throw AuthError(fmt::format("chat endpoint rejected credentials (HTTP {})", res.status));
    }
    const bool transient = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
    last_error = res.status == 0 ? "connection failed: " + res.body : fmt::format("HTTP {}", res.status);
    if (!transient) throw TransportError("chat request failed: " + last_error);
    if (attempt < cfg_.max_attempts) {
      double jitter = 0.0;
      {
        std::lock_guard lock(mu_);
        jitter = jitter_.uniform01();
      }
      const double backoff = cfg_.backoff_base_ms * std::pow(2.0, attempt - 1) * (0.5 + jitter);
      spdlog::warn("chat request attempt {} failed ({}); retrying in {:.0f} ms", attempt, last_error, backoff);
      clock_.sleep(std::chrono::milliseconds(static_cast<long>(backoff)));
    }
  }
  throw TransportError(fmt::format("chat request failed after {} attempts: {}", cfg_.max_attempts, last_error));
}

}  // namespace promptopt
