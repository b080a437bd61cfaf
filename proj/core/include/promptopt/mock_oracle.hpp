#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptopt/config.hpp"
#include "promptopt/llm.hpp"
#include "promptopt/rng.hpp"
#include "promptopt/types.hpp"

namespace promptopt {

enum class ChildKind { refine, augment };

struct MockChild {
  std::string text;
  std::uint64_t fingerprint = 0;
  double quality = 0.0;
};

/// Simulated LLM with a latent quality in [0, 1] per prompt fingerprint.
///
/// Ranking requests place the target at rank 1 + Binomial(n-1, (1-q)/2), so
/// q = 1 always ranks it first and q = 0 gives mean rank (n+1)/2; with
/// probability `hallucination_rate` the target is left out. Reflection
/// requests return synthetic reasons; refine and augment requests derive a
/// child prompt whose quality is the parent's plus Gaussian noise.
///
/// The oracle has to know each session's target. Sessions are registered up
/// front and looked up by their rendered interaction line.
///
/// Each call draws from a stream keyed on (seed, request content, how many
/// times that exact request has been seen), so results do not depend on the
/// interleaving of concurrent calls.
class MockOracle final : public ChatBackend {
 public:
  MockOracle(MockConfig cfg, std::uint64_t seed);

  ChatResponse complete(const ChatRequest& req) override;
  BackendKind kind() const noexcept override { return BackendKind::mock; }
  std::string snapshot_state() const override;
  void restore_state(std::string_view state) override;

  void register_quality(std::string_view prompt_text, double quality);
  // Memoized; unregistered prompts draw once from U[prior_low, prior_high].
  double quality_of(std::string_view prompt_text);
  double quality_of(std::uint64_t fingerprint);
  std::optional<double> known_quality(std::uint64_t fingerprint) const;

  // Adds the latent qualities from a snapshot without touching call counters.
  void import_qualities(std::string_view state);

  void register_sessions(std::span<const Session> sessions);

  // 0 disables the cap.
  void set_call_budget(long budget);
  long calls() const;

  const MockConfig& config() const noexcept { return cfg_; }

  // Target at a drawn rank, the rest shuffled; target omitted when hallucinating.
  std::vector<Item> mock_rank(double quality, const CandidateSet& candidates, SeededRng& rng) const;
  MockChild mock_derive_child(std::string_view parent_text, ChildKind kind, SeededRng& rng);

 private:
  SeededRng request_stream(const ChatRequest& req);
  std::string respond_ranking(const ChatRequest& req, SeededRng& rng);
  std::string respond_reasons(const ChatRequest& req, SeededRng& rng) const;
  std::string respond_child(std::string_view parent, ChildKind kind, SeededRng& rng);
  double quality_locked(std::uint64_t fingerprint);
  MockChild derive_child_locked(std::string_view parent_text, ChildKind kind, SeededRng& rng);

  MockConfig cfg_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  std::map<std::uint64_t, double> quality_;
  std::map<std::uint64_t, std::uint64_t> occurrences_;
  std::unordered_map<std::uint64_t, std::vector<std::string>> targets_;
  long budget_ = 0;
  long calls_ = 0;
};

}  // namespace promptopt
