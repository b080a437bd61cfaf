#include "promptopt/llm.hpp"

#include <stdexcept>

namespace promptopt {

std::string_view to_string(BackendKind kind) noexcept { return kind == BackendKind::remote ? "remote" : "mock"; }

BackendKind parse_backend_kind(std::string_view text) {
  if (text == "remote") return BackendKind::remote;
  if (text == "mock") return BackendKind::mock;
  throw std::invalid_argument("unknown backend: " + std::string(text));
}

void check_request(const ChatRequest& req) {
  if (req.system_text.empty()) throw std::invalid_argument("chat request has an empty system turn");
  if (req.user_text.empty()) throw std::invalid_argument("chat request has an empty user turn");
  if (req.temperature < 0) throw std::invalid_argument("chat request temperature must be >= 0");
}

}  // namespace promptopt
