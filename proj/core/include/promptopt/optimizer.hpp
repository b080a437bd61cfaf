#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptopt/config.hpp"
#include "promptopt/dataset.hpp"
#include "promptopt/llm.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/parser.hpp"
#include "promptopt/rng.hpp"
#include "promptopt/types.hpp"

namespace promptopt {

// A session paired with the candidate set the ranker is asked to order.
struct EvalCase {
  Session session;
  CandidateSet candidates;
};

std::vector<EvalCase> make_eval_cases(std::span<const Session> sessions, const PreparedDataset& data,
                                      std::int64_t seed);

struct SessionOutcome {
  std::string session_id;
  Rank rank;
  Verdict verdict = Verdict::no_list_found;
  double reward = 0.0;
  std::string raw;
};

ChatRequest ranking_request(std::string_view prompt_text, const EvalCase& c, const OptimizerConfig& cfg);

/// Ranks every case with `prompt_text`, keeping up to `cfg.concurrency`
/// requests in flight. Outcomes come back in input order. A backend failure
/// is rethrown after in-flight calls finish, tagged with the session id.
std::vector<SessionOutcome> evaluate_batch(std::string_view prompt_text, std::span<const EvalCase* const> cases,
                                           ChatBackend& backend, const OptimizerConfig& cfg);

// N distinct cases, uniformly at random.
std::vector<const EvalCase*> sample_batch(std::span<const EvalCase> cases, int n, SeededRng& rng);

struct ErrorCase {
  Session session;
  CandidateSet candidates;
  Rank produced_rank;
  std::string prompt_id;
  std::string raw_response;
};

std::vector<ErrorCase> collect_error_cases(const PromptCandidate& prompt, std::span<const EvalCase* const> batch,
                                           ChatBackend& backend, const OptimizerConfig& cfg,
                                           std::vector<SessionOutcome>* outcomes = nullptr);

// Up to n_reasons parsed reasons; fewer when the model under-delivers.
std::vector<std::string> infer_reasons(const ErrorCase& error, std::string_view current_prompt, int n_reasons,
                                       ChatBackend& backend, const OptimizerConfig& cfg);

// Sequential "p0000", "p0001", ... identifiers.
class PromptIdSource {
 public:
  explicit PromptIdSource(int next = 0) : next_(next) {}
  std::string next();
  int peek() const noexcept { return next_; }

 private:
  int next_;
};

// nullopt when the completion holds no prompt (the case is skipped).
std::optional<PromptCandidate> refine_prompt(const PromptCandidate& current, const ErrorCase& error,
                                             std::span<const std::string> reasons, ChatBackend& backend,
                                             PromptIdSource& ids, int iteration, const OptimizerConfig& cfg);

std::optional<PromptCandidate> augment_prompt(const PromptCandidate& refined, ChatBackend& backend,
                                              PromptIdSource& ids, int iteration, const OptimizerConfig& cfg);

struct UcbArm {
  std::string prompt_id;
  double reward_sum = 0.0;  // sum of batch-mean rewards
  long sessions_evaluated = 0;
  int pulls = 0;

  friend bool operator==(const UcbArm&, const UcbArm&) = default;
};

/// Arm bookkeeping for one evaluation round.
///
/// select() returns the first arm with S = 0 if any (in pool order), else
/// argmax of score + gamma * sqrt(ln(epoch) / S), first arm on ties.
/// update() adds the batch mean reward to R and the batch size to S.
class UcbBandit {
 public:
  UcbBandit(std::vector<UcbArm> arms, double gamma, RewardMode mode);

  std::size_t select(int epoch) const;
  void update(std::size_t arm, double batch_reward_sum, int batch_size);
  // R in accumulate mode, R / pulls in mean mode.
  double score(std::size_t arm) const;
  // Arm indices by descending score, stable.
  std::vector<std::size_t> ranking() const;

  const std::vector<UcbArm>& arms() const noexcept { return arms_; }

 private:
  std::vector<UcbArm> arms_;
  double gamma_;
  RewardMode mode_;
};

struct PullRecord {
  int iteration = 0;
  int epoch = 0;
  std::string prompt_id;
  std::vector<std::string> session_ids;
  double batch_mean_reward = 0.0;
};

struct UcbResult {
  std::map<std::string, double> reward;  // prompt_id -> score
  std::vector<UcbArm> arms;
  std::vector<PullRecord> pulls;
};

/// Bandit evaluation of a prompt pool. Pools larger than cfg.ucb_pool_size
/// are first subsampled uniformly. Evaluated prompts have reward_sum and
/// sessions_evaluated overwritten with the round's R and S.
UcbResult ucb_evaluate(std::span<PromptCandidate> pool, std::span<const EvalCase> train, const OptimizerConfig& cfg,
                       ChatBackend& backend, SeededRng& rng);

struct EvaluationRecord {
  int iteration = 0;
  double reward_sum = 0.0;
  long sessions_evaluated = 0;
  int pulls = 0;
};

struct ArchiveEntry {
  PromptCandidate prompt;
  std::vector<EvaluationRecord> evaluations;
};

struct BeamMember {
  std::string prompt_id;
  double score = 0.0;
  double reward_sum = 0.0;
  long sessions_evaluated = 0;
};

struct BeamSnapshot {
  int iteration = 0;
  std::vector<BeamMember> members;
};

struct MemberLog {
  std::string prompt_id;
  std::vector<std::string> batch_session_ids;
  int error_cases = 0;
  int reasons = 0;
  int refined = 0;
  int augmented = 0;
  int missing_children = 0;  // 2 per skipped case, 1 per failed augmentation
};

struct IterationLog {
  int iteration = 0;
  std::vector<MemberLog> members;
  int children = 0;
  int pool_size = 0;
  bool evaluated = false;
};

struct Transcript {
  int iteration = 0;
  std::string phase;  // "errors" or "ucb"
  std::string prompt_id;
  std::string session_id;
  Rank rank;
  Verdict verdict = Verdict::no_list_found;
  std::string raw;
};

enum class Phase { generate, evaluate, finished };

std::string_view to_string(Phase phase) noexcept;

// Everything needed to continue an interrupted run bit-for-bit.
struct OptimizerState {
  int iteration = 0;  // completed iterations
  Phase phase = Phase::generate;
  std::vector<std::string> beam;
  std::vector<ArchiveEntry> archive;
  std::vector<UcbArm> arms;  // current evaluation round
  int epoch = 0;             // completed epochs in the current round
  std::vector<std::string> pending_children;  // generated so far in an unfinished generation phase
  int next_prompt_seq = 0;
  std::string rng_state;
  std::vector<PullRecord> pulls;
  std::vector<BeamSnapshot> beam_history;
  std::vector<IterationLog> iterations;
  std::vector<Transcript> transcripts;

  const ArchiveEntry& entry(std::string_view prompt_id) const;
  ArchiveEntry& entry(std::string_view prompt_id);
};

std::string state_to_json(const OptimizerState& state);
OptimizerState state_from_json(std::string_view text);

// One line per prompt: {id, parent, origin, iteration, R, S}.
std::string archive_jsonl(const OptimizerState& state);
// One line per pull: {iteration, epoch, prompt_id, sessions, batch_mean_reward}.
std::string pulls_jsonl(const OptimizerState& state);

struct BeamState {
  int iteration = 0;
  std::vector<PromptCandidate> beam;  // best first
  std::vector<ArchiveEntry> archive;
};

/// Resumable beam search over prompts.
///
/// Each iteration: every beam member ranks a fresh batch, its error cases
/// are reflected on, refined and augmented; the children (and, with
/// include_parents, the current beam) are scored by the bandit, and the top
/// beam_width prompts become the next beam. step() performs either the
/// generation work of one beam member or one bandit epoch, which is the
/// checkpoint unit.
class IterativeOptimizer {
 public:
  IterativeOptimizer(OptimizerConfig cfg, std::span<const EvalCase> train, ChatBackend& backend, SeededRng rng,
                     bool keep_transcripts = true);

  void start(PromptCandidate initial);
  void resume(OptimizerState state);
  void step();
  bool finished() const noexcept { return state_.phase == Phase::finished; }

  const OptimizerState& state() const noexcept { return state_; }
  BeamState beam_state() const;

 private:
  void generate();
  void evaluate_epoch();
  void finish_iteration(std::vector<std::string> next_beam);
  void record_transcripts(const std::string& phase, const std::string& prompt_id,
                          std::span<const SessionOutcome> outcomes);
  std::vector<BeamMember> beam_members() const;

  OptimizerConfig cfg_;
  std::span<const EvalCase> train_;
  ChatBackend& backend_;
  SeededRng rng_;
  bool keep_transcripts_;
  OptimizerState state_;
};

using StepCallback = std::function<void(const OptimizerState&)>;

// Runs to completion from `initial`; `on_step` sees the state after every step.
BeamState iterate(const PromptCandidate& initial, std::span<const EvalCase> train, const OptimizerConfig& cfg,
                  ChatBackend& backend, SeededRng rng, const StepCallback& on_step = {});

struct EvaluationResult {
  AggregateReport report;
  std::vector<SessionOutcome> outcomes;
};

EvaluationResult evaluate_prompt(std::string_view prompt_text, std::span<const EvalCase> cases, ChatBackend& backend,
                                 const OptimizerConfig& cfg);

struct CrossCell {
  std::string prompt_domain;
  std::string prompt_id;
  std::string eval_domain;
  AggregateReport report;
};

struct SelectionResult {
  std::string domain;
  PromptCandidate prompt;
  double mean_ndcg5 = 0.0;
  double mean_hr5 = 0.0;
  std::vector<CrossCell> matrix;
};

/// Scores every domain's top prompt on every domain's validation cases and
/// keeps the one with the best mean NDCG@5 across domains (then mean HR@5,
/// then smaller prompt_id).
SelectionResult select_cross_domain(const std::map<std::string, PromptCandidate>& top_prompts,
                                    const std::map<std::string, std::vector<EvalCase>>& validation,
                                    const OptimizerConfig& cfg, ChatBackend& backend);

// prompt_domain,prompt_id,eval_domain,ndcg@5,hr@5, one row per pair.
std::string cross_matrix_csv(const SelectionResult& result);

}  // namespace promptopt
