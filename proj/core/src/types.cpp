#include "promptopt/types.hpp"

#include <cctype>
#include <stdexcept>
#include <unordered_set>

#include "promptopt/hashing.hpp"

namespace promptopt {

std::string_view to_string(PromptOrigin origin) noexcept {
  switch (origin) {
    case PromptOrigin::initial:
      return "initial";
    case PromptOrigin::refined:
      return "refined";
    case PromptOrigin::augmented:
      return "augmented";
  }
  return "initial";
}

PromptOrigin parse_origin(std::string_view text) {
  if (text == "initial") return PromptOrigin::initial;
  if (text == "refined") return PromptOrigin::refined;
  if (text == "augmented") return PromptOrigin::augmented;
  throw std::invalid_argument("unknown prompt origin: " + std::string(text));
}

PromptCandidate make_initial_prompt(std::string prompt_id, std::string text) {
  PromptCandidate p;
  p.prompt_id = std::move(prompt_id);
  p.text = std::move(text);
  p.origin = PromptOrigin::initial;
  return p;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::uint64_t prompt_fingerprint(std::string_view prompt_text) {
  return fnv1a64(normalize_whitespace(prompt_text));
}

void reindex(std::vector<Item>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) items[i].index = static_cast<int>(i + 1);
}

void check_item(const Item& item) {
  if (item.index < 1) throw std::invalid_argument("item index must be >= 1");
  if (normalize_whitespace(item.title).empty()) throw std::invalid_argument("item title is blank");
}

void check_session(const Session& session) {
  if (session.interactions.empty()) throw std::invalid_argument("session has no interactions: " + session.session_id);
  check_item(session.target);
  for (const auto& it : session.interactions) {
    check_item(it);
    if (it.title == session.target.title) {
      throw std::invalid_argument("session target appears among its interactions: " + session.session_id);
    }
  }
}

void check_candidate_set(const CandidateSet& candidates) {
  const int n = candidates.size();
  if (n == 0) throw std::invalid_argument("candidate set is empty");
  if (candidates.target_position < 1 || candidates.target_position > n) {
    throw std::invalid_argument("candidate target_position out of range");
  }
  std::unordered_set<std::string> seen;
  for (const auto& it : candidates.items) {
    check_item(it);
    if (!seen.insert(it.title).second) throw std::invalid_argument("duplicate candidate title: " + it.title);
  }
}

void check_prompt(const PromptCandidate& prompt) {
  if (normalize_whitespace(prompt.text).empty()) throw std::invalid_argument("prompt text is empty: " + prompt.prompt_id);
  if (prompt.reward_sum < 0.0 || prompt.sessions_evaluated < 0) {
    throw std::invalid_argument("prompt accumulators must be nonnegative");
  }
  const bool needs_parent = prompt.origin != PromptOrigin::initial;
  if (needs_parent != prompt.parent_id.has_value()) {
    throw std::invalid_argument("prompt lineage does not match origin: " + prompt.prompt_id);
  }
}

}  // namespace promptopt
