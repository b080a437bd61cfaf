#include "promptopt/mock_oracle.hpp"

#include <algorithm>
#include <array>
#include <chrono>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/hashing.hpp"
#include "promptopt/parser.hpp"
#include "promptopt/prompts.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

constexpr std::string_view kInteractionsLead = "Current session interactions: ";
constexpr std::string_view kCandidatesLead = "Candidate item set: ";

constexpr std::array<std::string_view, 6> kGuidance{
    "Consider the user's preferences, tastes, and previous interactions when inferring intents.",
    "Identify patterns or relationships between the items before grouping them into combinations.",
    "Weigh the most recent interactions more heavily when selecting the dominant intent.",
    "Explain how each candidate relates to the selected intent before producing the ranking.",
    "Prefer candidates that complement the items already in the session.",
    "Make sure every candidate item appears exactly once in the final ranking.",
};

constexpr std::array<std::string_view, 4> kReasonTemplates{
    "The prompt assumes the user's intent can be inferred from the items alone and gives no guidance about "
    "preferences or tastes (case {}).",
    "The prompt does not explain how combinations of items should be discovered, so the grouping step is "
    "arbitrary (case {}).",
    "The prompt does not tell the model to relate candidates back to the selected intent (case {}).",
    "The prompt treats all interactions equally and ignores their order within the session (case {}).",
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string_view line_at(std::string_view text, std::size_t which) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < which; ++i) {
    pos = text.find('\n', pos);
    if (pos == std::string_view::npos) return {};
    ++pos;
  }
  const auto end = text.find('\n', pos);
  return text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
}

int requested_reasons(std::string_view user) {
  const auto marker = user.find(prompts::kReasonsMarker);
  if (marker == std::string_view::npos) return 1;
  const auto give = user.rfind(", give ", marker);
  if (give == std::string_view::npos) return 1;
  int n = 0;
  for (std::size_t i = give + 7; i < marker && user[i] >= '0' && user[i] <= '9'; ++i) n = n * 10 + (user[i] - '0');
  return std::clamp(n, 1, 64);
}

}  // namespace

MockOracle::MockOracle(MockConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

void MockOracle::register_quality(std::string_view prompt_text, double quality) {
  std::lock_guard lock(mu_);
  quality_[prompt_fingerprint(prompt_text)] = clamp01(quality);
}

double MockOracle::quality_locked(std::uint64_t fingerprint) {
  if (auto it = quality_.find(fingerprint); it != quality_.end()) return it->second;
  // Keyed on the fingerprint, not on call order, so the prior draw is stable.
  auto rng = derive_rng(seed_, "mock/prior/" + to_hex(fingerprint));
  const double q = cfg_.prior_low + (cfg_.prior_high - cfg_.prior_low) * rng.uniform01();
  quality_.emplace(fingerprint, q);
  return q;
}

double MockOracle::quality_of(std::uint64_t fingerprint) {
  std::lock_guard lock(mu_);
  return quality_locked(fingerprint);
}

double MockOracle::quality_of(std::string_view prompt_text) { return quality_of(prompt_fingerprint(prompt_text)); }

std::optional<double> MockOracle::known_quality(std::uint64_t fingerprint) const {
  std::lock_guard lock(mu_);
  if (auto it = quality_.find(fingerprint); it != quality_.end()) return it->second;
  return std::nullopt;
}

void MockOracle::register_sessions(std::span<const Session> sessions) {
  std::lock_guard lock(mu_);
  for (const auto& s : sessions) {
    auto& titles = targets_[fnv1a64(std::string(kInteractionsLead) + render_item_list(s.interactions))];
    if (std::find(titles.begin(), titles.end(), s.target.title) == titles.end()) titles.push_back(s.target.title);
  }
}

void MockOracle::set_call_budget(long budget) {
  std::lock_guard lock(mu_);
  budget_ = budget;
}

long MockOracle::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<Item> MockOracle::mock_rank(double quality, const CandidateSet& candidates, SeededRng& rng) const {
  const int n = candidates.size();
  std::vector<Item> others;
  others.reserve(candidates.items.size());
  for (int i = 0; i < n; ++i) {
    if (i + 1 != candidates.target_position) others.push_back(candidates.items[static_cast<std::size_t>(i)]);
  }
  rng.shuffle(std::span(others));
  if (rng.bernoulli(cfg_.hallucination_rate)) return others;
  const int rank = 1 + rng.binomial(n - 1, (1.0 - clamp01(quality)) / 2.0);
  others.insert(others.begin() + (rank - 1), candidates.target());
  return others;
}

MockChild MockOracle::mock_derive_child(std::string_view parent_text, ChildKind kind, SeededRng& rng) {
  std::lock_guard lock(mu_);
  return derive_child_locked(parent_text, kind, rng);
}

MockChild MockOracle::derive_child_locked(std::string_view parent_text, ChildKind kind, SeededRng& rng) {
  const double parent_q = quality_locked(prompt_fingerprint(parent_text));
  MockChild child;
  const std::string tag = to_hex(rng.next_u64()).substr(0, 8);
  if (kind == ChildKind::refine) {
    child.quality = clamp01(parent_q + rng.normal(cfg_.refine_gain_mean, cfg_.refine_gain_sd));
    const auto guidance = kGuidance[rng.uniform_below(kGuidance.size())];
    child.text = fmt::format("{}\n{} (revision {})", parent_text, guidance, tag);
  } else {
    child.quality = clamp01(parent_q + rng.normal(0.0, cfg_.augment_noise));
    child.text = fmt::format("{}\n(Rephrased variant {}.)", parent_text, tag);
  }
  child.fingerprint = prompt_fingerprint(child.text);
  quality_[child.fingerprint] = child.quality;
  return child;
}

SeededRng MockOracle::request_stream(const ChatRequest& req) {
  // The output-format instruction is not part of the task, so json mode replays the same draws.
  std::string_view user = req.user_text;
  if (user.ends_with(prompts::kJsonModeConstraint)) {
    user.remove_suffix(prompts::kJsonModeConstraint.size());
    if (user.ends_with('\n')) user.remove_suffix(1);
  }
  const std::uint64_t key = fnv1a64(user, fnv1a64(req.system_text + '\x1f'));
  const std::uint64_t occurrence = occurrences_[key]++;
  return derive_rng(seed_, fmt::format("mock/{}/{}", to_hex(key), occurrence));
}

std::string MockOracle::respond_ranking(const ChatRequest& req, SeededRng& rng) {
  const auto interactions = line_at(req.user_text, 0);
  const auto candidate_line = line_at(req.user_text, 1);
  CandidateSet cs;
  if (candidate_line.starts_with(kCandidatesLead)) {
    for (auto& ref : scan_quoted_refs(candidate_line.substr(kCandidatesLead.size()))) {
      cs.items.push_back(Item{ref.index, std::move(ref.title)});
    }
  }
  if (cs.items.empty()) return "I could not find a candidate set to rank.";

  std::optional<int> target_pos;
  if (auto it = targets_.find(fnv1a64(interactions)); it != targets_.end()) {
    for (const auto& title : it->second) {
      auto found = std::find_if(cs.items.begin(), cs.items.end(), [&](const Item& i) { return i.title == title; });
      if (found != cs.items.end()) {
        target_pos = static_cast<int>(found - cs.items.begin()) + 1;
        break;
      }
    }
  }
  std::vector<Item> ordering;
  if (target_pos) {
    cs.target_position = *target_pos;
    ordering = mock_rank(quality_locked(prompt_fingerprint(req.system_text)), cs, rng);
  } else {
    ordering = cs.items;
    rng.shuffle(std::span(ordering));
  }
  return render_ranking_answer(ordering, false);
}

std::string MockOracle::respond_reasons(const ChatRequest& req, SeededRng& rng) const {
  const int n = requested_reasons(req.user_text);
  std::string out;
  for (int i = 0; i < n; ++i) {
    const auto tmpl = kReasonTemplates[rng.uniform_below(kReasonTemplates.size())];
    out += fmt::format("<START>{}<END>\n", fmt::format(fmt::runtime(tmpl), to_hex(rng.next_u64()).substr(0, 6)));
  }
  return out;
}

std::string MockOracle::respond_child(std::string_view parent, ChildKind kind, SeededRng& rng) {
  const MockChild child = derive_child_locked(parent, kind, rng);
  if (kind == ChildKind::refine) return "Here is the improved prompt.\n<START>" + child.text + "<END>";
  return child.text;
}

ChatResponse MockOracle::complete(const ChatRequest& req) {
  check_request(req);
  const auto t0 = std::chrono::steady_clock::now();
  std::unique_lock lock(mu_);
  if (budget_ > 0 && calls_ >= budget_) throw BudgetExceeded(fmt::format("mock call budget of {} exhausted", budget_));
  ++calls_;
  auto rng = request_stream(req);

  std::string text;
  const std::string_view user = req.user_text;
  if (user.starts_with(kInteractionsLead)) {
    text = respond_ranking(req, rng);
  } else if (user.find(prompts::kReasonsMarker) != std::string_view::npos) {
    text = respond_reasons(req, rng);
  } else if (user.find(prompts::kRefineMarker) != std::string_view::npos) {
    const auto b = user.find(prompts::kCurrentPromptPrefix);
    const auto e = user.find(prompts::kErrorCaseLead);
    if (b == std::string_view::npos || e == std::string_view::npos || e < b) {
      text = "I need the current prompt to improve it.";
    } else {
      const auto start = b + prompts::kCurrentPromptPrefix.size();
      text = respond_child(user.substr(start, e - start), ChildKind::refine, rng);
    }
  } else if (user.starts_with(prompts::kAugmentMarker)) {
    const auto b = user.find(prompts::kAugmentInputPrefix);
    const auto e = user.rfind(prompts::kAugmentInputSuffix);
    if (b == std::string_view::npos || e == std::string_view::npos || e < b) {
      text = "I need an input prompt to rephrase.";
    } else {
      const auto start = b + prompts::kAugmentInputPrefix.size();
      text = respond_child(user.substr(start, e - start), ChildKind::augment, rng);
    }
  } else {
    text = "I'm not sure how to help with that request.";
  }
  const auto latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return ChatResponse{std::move(text), latency, BackendKind::mock, 1};
}

std::string MockOracle::snapshot_state() const {
  std::lock_guard lock(mu_);
  json q = json::object();
  for (const auto& [fp, v] : quality_) q[to_hex(fp)] = v;
  json occ = json::object();
  for (const auto& [k, v] : occurrences_) occ[to_hex(k)] = v;
  return json{{"quality", q}, {"occurrences", occ}}.dump();
}

void MockOracle::restore_state(std::string_view state) {
  const json j = json::parse(state);
  std::lock_guard lock(mu_);
  quality_.clear();
  occurrences_.clear();
  for (const auto& [k, v] : j.at("quality").items()) quality_[std::stoull(k, nullptr, 16)] = v.get<double>();
  for (const auto& [k, v] : j.at("occurrences").items()) occurrences_[std::stoull(k, nullptr, 16)] = v.get<std::uint64_t>();
}

void MockOracle::import_qualities(std::string_view state) {
  const json j = json::parse(state);
  std::lock_guard lock(mu_);
  for (const auto& [k, v] : j.at("quality").items()) quality_[std::stoull(k, nullptr, 16)] = v.get<double>();
}

}  // namespace promptopt
