#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptopt {

// An item as it appears in a rendered list. `index` is positional (1-based)
// and reassigned on every rendering; identity within a list is the title.
struct Item {
  int index = 1;
  std::string title;

  friend bool operator==(const Item&, const Item&) = default;
};

struct Session {
  std::string session_id;
  std::vector<Item> interactions;  // chronological
  Item target;
  std::string domain;
  std::int64_t day_bucket = 0;

  friend bool operator==(const Session&, const Session&) = default;
};

struct CandidateSet {
  std::vector<Item> items;
  int target_position = 1;  // 1-based
  std::uint64_t seed = 0;

  const Item& target() const { return items.at(static_cast<std::size_t>(target_position - 1)); }
  int size() const noexcept { return static_cast<int>(items.size()); }

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

enum class PromptOrigin { initial, refined, augmented };

std::string_view to_string(PromptOrigin origin) noexcept;
PromptOrigin parse_origin(std::string_view text);

// A bandit arm. reward_sum and sessions_evaluated hold the reward and
// session accumulators from the last UCB round the prompt took part in.
struct PromptCandidate {
  std::string prompt_id;
  std::string text;
  PromptOrigin origin = PromptOrigin::initial;
  std::optional<std::string> parent_id;
  int iteration_born = 0;
  double reward_sum = 0.0;
  long sessions_evaluated = 0;

  friend bool operator==(const PromptCandidate&, const PromptCandidate&) = default;
};

PromptCandidate make_initial_prompt(std::string prompt_id, std::string text);

// Throws std::invalid_argument when a structural invariant does not hold.
void check_item(const Item& item);
void check_session(const Session& session);
void check_candidate_set(const CandidateSet& candidates);
void check_prompt(const PromptCandidate& prompt);

// Trim, collapse internal whitespace runs to one space.
std::string normalize_whitespace(std::string_view text);

// Stable hash of the normalized prompt text.
std::uint64_t prompt_fingerprint(std::string_view prompt_text);

// Re-number items 1..n in their current order.
void reindex(std::vector<Item>& items);

}  // namespace promptopt
