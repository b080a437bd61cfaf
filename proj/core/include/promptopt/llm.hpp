#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace promptopt {

enum class BackendKind { remote, mock };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view text);

struct ChatRequest {
  std::string system_text;  // task description, "system" role
  std::string user_text;    // rendered session and candidates, "user" role
  double temperature = 0.0;
  int max_output_tokens = 1024;
  bool json_mode = false;
};

// Throws std::invalid_argument for an empty system or user turn.
void check_request(const ChatRequest& req);

struct ChatResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  BackendKind backend = BackendKind::mock;
  int attempt_count = 1;
};

/// Chat-completion backend. Implementations are safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Throws TransportError, AuthError or BudgetExceeded.
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual BackendKind kind() const noexcept = 0;

  // Opaque JSON state for checkpoints. Backends without resumable state
  // return "{}" and ignore restore.
  virtual std::string snapshot_state() const { return "{}"; }
  virtual void restore_state(std::string_view /*state*/) {}
};

}  // namespace promptopt
