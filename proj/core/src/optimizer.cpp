#include "promptopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "promptopt/errors.hpp"
#include "promptopt/prompts.hpp"

namespace promptopt {

std::vector<EvalCase> make_eval_cases(std::span<const Session> sessions, const PreparedDataset& data,
                                      std::int64_t seed) {
  std::vector<EvalCase> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(EvalCase{s, data.candidates_for(s, seed)});
  return out;
}

ChatRequest ranking_request(std::string_view prompt_text, const EvalCase& c, const OptimizerConfig& cfg) {
  ChatRequest req;
  req.system_text = std::string(prompt_text);
  req.user_text = render_user_input(c.session, c.candidates);
  if (cfg.json_mode) {
    req.user_text += '\n';
    req.user_text += prompts::kJsonModeConstraint;
  }
  req.temperature = cfg.ranking_temperature;
  req.json_mode = cfg.json_mode;
  return req;
}

namespace {

SessionOutcome rank_one(std::string_view prompt_text, const EvalCase& c, ChatBackend& backend,
                        const OptimizerConfig& cfg) {
  ChatResponse resp;
  try {
    resp = backend.complete(ranking_request(prompt_text, c, cfg));
  } catch (BackendError& e) {
    if (e.session_id().empty()) e.set_session_id(c.session.session_id);
    throw;
  }
  RankedResponse parsed = parse_ranking(resp.text, c.candidates, cfg.json_mode);
  SessionOutcome out;
  out.session_id = c.session.session_id;
  out.rank = parsed.target_rank;
  out.verdict = parsed.verdict;
  out.reward = bandit_reward(out.rank, c.candidates.size());
  out.raw = std::move(resp.text);
  return out;
}

}  // namespace

std::vector<SessionOutcome> evaluate_batch(std::string_view prompt_text, std::span<const EvalCase* const> cases,
                                           ChatBackend& backend, const OptimizerConfig& cfg) {
  std::vector<SessionOutcome> out(cases.size());
  const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.concurrency, 1)), cases.size());
  if (width <= 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) out[i] = rank_one(prompt_text, *cases[i], backend, cfg);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::size_t first_error_index = std::numeric_limits<std::size_t>::max();
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= cases.size()) return;
      try {
        out[i] = rank_one(prompt_text, *cases[i], backend, cfg);
      } catch (...) {
        std::lock_guard lock(mu);
        // Keep the lowest failing index so the reported session is stable.
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(width);
  for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::vector<const EvalCase*> sample_batch(std::span<const EvalCase> cases, int n, SeededRng& rng) {
  if (n < 0) throw std::invalid_argument("batch size must be >= 0");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n), cases.size());
  std::vector<const EvalCase*> out;
  out.reserve(k);
  for (std::size_t i : rng.sample_indices(cases.size(), k)) out.push_back(&cases[i]);
  return out;
}

std::vector<ErrorCase> collect_error_cases(const PromptCandidate& prompt, std::span<const EvalCase* const> batch,
                                           ChatBackend& backend, const OptimizerConfig& cfg,
                                           std::vector<SessionOutcome>* outcomes) {
  std::vector<SessionOutcome> results = evaluate_batch(prompt.text, batch, backend, cfg);
  std::vector<ErrorCase> errors;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const EvalCase& c = *batch[i];
    if (!is_error_case(results[i].rank, c.candidates.size())) continue;
    errors.push_back(ErrorCase{c.session, c.candidates, results[i].rank, prompt.prompt_id, results[i].raw});
  }
  if (outcomes) *outcomes = std::move(results);
  return errors;
}

namespace {

std::string render_error_case(const ErrorCase& error) {
  const Item& target = error.candidates.target();
  std::string out = render_user_input(error.session, error.candidates);
  out += fmt::format("\nGround truth next item: {}.\"{}\"", target.index, target.title);
  if (error.produced_rank) {
    out += fmt::format(", ranked {} of {}", *error.produced_rank, error.candidates.size());
  } else {
    out += ", missing from the ranking";
  }
  return out;
}

ChatRequest generation_request(std::string user_text, const OptimizerConfig& cfg) {
  ChatRequest req;
  req.system_text = std::string(prompts::kAssistantSystem);
  req.user_text = std::move(user_text);
  req.temperature = cfg.generation_temperature;
  return req;
}

}  // namespace

std::vector<std::string> infer_reasons(const ErrorCase& error, std::string_view current_prompt, int n_reasons,
                                       ChatBackend& backend, const OptimizerConfig& cfg) {
  if (n_reasons < 1) throw std::invalid_argument("n_reasons must be >= 1");
  const ChatResponse resp =
      backend.complete(generation_request(prompts::reasons_request(current_prompt, render_error_case(error), n_reasons), cfg));
  std::vector<std::string> reasons = parse_reasons(resp.text);
  if (reasons.size() > static_cast<std::size_t>(n_reasons)) reasons.resize(static_cast<std::size_t>(n_reasons));
  if (reasons.size() < static_cast<std::size_t>(n_reasons)) {
    spdlog::warn("session {}: asked for {} reasons, got {}", error.session.session_id, n_reasons, reasons.size());
  }
  return reasons;
}

std::string PromptIdSource::next() { return fmt::format("p{:04d}", next_++); }

std::optional<PromptCandidate> refine_prompt(const PromptCandidate& current, const ErrorCase& error,
                                             std::span<const std::string> reasons, ChatBackend& backend,
                                             PromptIdSource& ids, int iteration, const OptimizerConfig& cfg) {
  if (reasons.empty()) throw std::invalid_argument("refine_prompt needs at least one reason");
  const ChatResponse resp = backend.complete(
      generation_request(prompts::refine_request(current.text, render_error_case(error), reasons), cfg));
  std::string body;
  try {
    body = parse_prompt_body(resp.text);
  } catch (const EmptyPrompt&) {
    spdlog::info("refinement of {} on session {} returned no prompt, skipping", current.prompt_id,
                 error.session.session_id);
    return std::nullopt;
  }
  PromptCandidate child;
  child.prompt_id = ids.next();
  child.text = std::move(body);
  child.origin = PromptOrigin::refined;
  child.parent_id = current.prompt_id;
  child.iteration_born = iteration;
  return child;
}

std::optional<PromptCandidate> augment_prompt(const PromptCandidate& refined, ChatBackend& backend,
                                              PromptIdSource& ids, int iteration, const OptimizerConfig& cfg) {
  if (refined.origin != PromptOrigin::refined) throw std::invalid_argument("augment_prompt expects a refined prompt");
  const ChatResponse resp = backend.complete(generation_request(prompts::augment_request(refined.text), cfg));
  std::string body;
  try {
    body = parse_prompt_body(resp.text);
  } catch (const EmptyPrompt&) {
    spdlog::info("augmentation of {} returned no prompt, skipping", refined.prompt_id);
    return std::nullopt;
  }
  PromptCandidate child;
  child.prompt_id = ids.next();
  child.text = std::move(body);
  child.origin = PromptOrigin::augmented;
  child.parent_id = refined.prompt_id;
  child.iteration_born = iteration;
  return child;
}

UcbBandit::UcbBandit(std::vector<UcbArm> arms, double gamma, RewardMode mode)
    : arms_(std::move(arms)), gamma_(gamma), mode_(mode) {
  if (arms_.empty()) throw std::invalid_argument("bandit needs at least one arm");
  if (!(gamma_ > 0.0)) throw std::invalid_argument("gamma must be > 0");
}

double UcbBandit::score(std::size_t arm) const {
  const UcbArm& a = arms_.at(arm);
  if (mode_ == RewardMode::mean) return a.pulls > 0 ? a.reward_sum / a.pulls : 0.0;
  return a.reward_sum;
}

std::size_t UcbBandit::select(int epoch) const {
  if (epoch < 1) throw std::invalid_argument("epochs are numbered from 1");
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    if (arms_[i].sessions_evaluated == 0) return i;
  }
  const double log_e = std::log(static_cast<double>(epoch));
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms_.size(); ++i) {
    const double bonus = gamma_ * std::sqrt(log_e / static_cast<double>(arms_[i].sessions_evaluated));
    const double value = score(i) + bonus;
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

void UcbBandit::update(std::size_t arm, double batch_reward_sum, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  UcbArm& a = arms_.at(arm);
  a.sessions_evaluated += batch_size;
  a.reward_sum += batch_reward_sum / batch_size;
  ++a.pulls;
}

std::vector<std::size_t> UcbBandit::ranking() const {
  std::vector<std::size_t> order(arms_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  return order;
}

namespace {

std::vector<std::size_t> subsample_pool(std::size_t n, int limit, SeededRng& rng) {
  std::vector<std::size_t> keep(n);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (limit >= 1 && n > static_cast<std::size_t>(limit)) {
    keep = rng.sample_indices(n, static_cast<std::size_t>(limit));
    std::sort(keep.begin(), keep.end());
  }
  return keep;
}

double batch_sum(std::span<const SessionOutcome> outcomes) {
  double sum = 0.0;
  for (const auto& o : outcomes) sum += o.reward;
  return sum;
}

std::vector<std::string> session_ids(std::span<const EvalCase* const> batch) {
  std::vector<std::string> ids;
  ids.reserve(batch.size());
  for (const auto* c : batch) ids.push_back(c->session.session_id);
  return ids;
}

}  // namespace

UcbResult ucb_evaluate(std::span<PromptCandidate> pool, std::span<const EvalCase> train, const OptimizerConfig& cfg,
                       ChatBackend& backend, SeededRng& rng) {
  if (pool.empty()) throw std::invalid_argument("ucb_evaluate needs a non-empty pool");
  if (train.empty()) throw EmptyInput("ucb_evaluate needs training sessions");
  const std::vector<std::size_t> keep = subsample_pool(pool.size(), cfg.ucb_pool_size, rng);

  std::vector<UcbArm> arms;
  arms.reserve(keep.size());
  for (std::size_t i : keep) arms.push_back(UcbArm{pool[i].prompt_id});
  UcbBandit bandit(std::move(arms), cfg.gamma, cfg.reward_mode);

  UcbResult result;
  for (int epoch = 1; epoch <= cfg.ucb_epochs; ++epoch) {
    const std::size_t arm = bandit.select(epoch);
    const auto batch = sample_batch(train, cfg.batch_size, rng);
    const auto outcomes = evaluate_batch(pool[keep[arm]].text, batch, backend, cfg);
    const double mean = batch_sum(outcomes) / static_cast<double>(batch.size());
    bandit.update(arm, batch_sum(outcomes), static_cast<int>(batch.size()));
    result.pulls.push_back(PullRecord{0, epoch, bandit.arms()[arm].prompt_id, session_ids(batch), mean});
  }
  for (std::size_t a = 0; a < keep.size(); ++a) {
    PromptCandidate& p = pool[keep[a]];
    p.reward_sum = bandit.arms()[a].reward_sum;
    p.sessions_evaluated = bandit.arms()[a].sessions_evaluated;
    result.reward[p.prompt_id] = bandit.score(a);
  }
  result.arms = bandit.arms();
  return result;
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::generate: return "generate";
    case Phase::evaluate: return "evaluate";
    case Phase::finished: return "finished";
  }
  return "unknown";
}

const ArchiveEntry& OptimizerState::entry(std::string_view prompt_id) const {
  for (const auto& e : archive) {
    if (e.prompt.prompt_id == prompt_id) return e;
  }
  throw std::out_of_range(fmt::format("unknown prompt id {}", prompt_id));
}

ArchiveEntry& OptimizerState::entry(std::string_view prompt_id) {
  return const_cast<ArchiveEntry&>(std::as_const(*this).entry(prompt_id));
}

IterativeOptimizer::IterativeOptimizer(OptimizerConfig cfg, std::span<const EvalCase> train, ChatBackend& backend,
                                       SeededRng rng, bool keep_transcripts)
    : cfg_(validate_config(cfg)), train_(train), backend_(backend), rng_(std::move(rng)),
      keep_transcripts_(keep_transcripts) {
  if (train_.empty()) throw EmptyInput("optimizer needs training sessions");
}

void IterativeOptimizer::start(PromptCandidate initial) {
  PromptIdSource ids;
  if (initial.prompt_id.empty()) initial.prompt_id = ids.next();
  check_prompt(initial);
  state_ = OptimizerState{};
  // Children are numbered after the initial prompt, whatever it is called.
  state_.next_prompt_seq = 1;
  state_.beam = {initial.prompt_id};
  state_.archive.push_back(ArchiveEntry{std::move(initial), {}});
  state_.beam_history.push_back(BeamSnapshot{0, beam_members()});
  state_.phase = cfg_.opt_iterations == 0 ? Phase::finished : Phase::generate;
  state_.rng_state = rng_.serialize();
}

void IterativeOptimizer::resume(OptimizerState state) {
  state_ = std::move(state);
  rng_.restore(state_.rng_state);
}

void IterativeOptimizer::step() {
  switch (state_.phase) {
    case Phase::generate: generate(); break;
    case Phase::evaluate: evaluate_epoch(); break;
    case Phase::finished: return;
  }
  state_.rng_state = rng_.serialize();
}

void IterativeOptimizer::record_transcripts(const std::string& phase, const std::string& prompt_id,
                                            std::span<const SessionOutcome> outcomes) {
  if (!keep_transcripts_) return;
  for (const auto& o : outcomes) {
    state_.transcripts.push_back(
        Transcript{state_.iteration + 1, phase, prompt_id, o.session_id, o.rank, o.verdict, o.raw});
  }
}

void IterativeOptimizer::generate() {
  const int t = state_.iteration + 1;
  if (state_.iterations.empty() || state_.iterations.back().iteration != t) {
    state_.iterations.push_back(IterationLog{t, {}, 0, 0, false});
    state_.pending_children.clear();
  }
  IterationLog& log = state_.iterations.back();
  const std::size_t member_index = log.members.size();
  const PromptCandidate member = state_.entry(state_.beam.at(member_index)).prompt;
  PromptIdSource ids(state_.next_prompt_seq);
  std::vector<std::string>& children = state_.pending_children;

  MemberLog mlog;
  mlog.prompt_id = member.prompt_id;
  const auto batch = sample_batch(train_, cfg_.batch_size, rng_);
  mlog.batch_session_ids = session_ids(batch);
  std::vector<SessionOutcome> outcomes;
  const auto errors = collect_error_cases(member, batch, backend_, cfg_, &outcomes);
  record_transcripts("errors", member.prompt_id, outcomes);
  mlog.error_cases = static_cast<int>(errors.size());

  std::vector<PromptCandidate> made;
  for (const auto& error : errors) {
    const auto reasons = infer_reasons(error, member.text, cfg_.reasons_per_error, backend_, cfg_);
    mlog.reasons += static_cast<int>(reasons.size());
    if (reasons.empty()) {
      mlog.missing_children += 2;
      continue;
    }
    auto refined = refine_prompt(member, error, reasons, backend_, ids, t, cfg_);
    if (!refined) {
      mlog.missing_children += 2;
      continue;
    }
    ++mlog.refined;
    auto augmented = augment_prompt(*refined, backend_, ids, t, cfg_);
    made.push_back(std::move(*refined));
    if (!augmented) {
      mlog.missing_children += 1;
      continue;
    }
    ++mlog.augmented;
    made.push_back(std::move(*augmented));
  }
  for (auto& child : made) {
    children.push_back(child.prompt_id);
    state_.archive.push_back(ArchiveEntry{std::move(child), {}});
  }
  log.members.push_back(std::move(mlog));
  state_.next_prompt_seq = ids.peek();
  if (log.members.size() < state_.beam.size()) return;

  log.children = static_cast<int>(children.size());
  if (children.empty()) {
    spdlog::info("iteration {}: no children, beam unchanged", t);
    finish_iteration(state_.beam);
    return;
  }

  std::vector<std::string> pool;
  if (cfg_.include_parents) pool = state_.beam;
  pool.insert(pool.end(), children.begin(), children.end());
  const auto keep = subsample_pool(pool.size(), cfg_.ucb_pool_size, rng_);
  state_.arms.clear();
  for (std::size_t i : keep) state_.arms.push_back(UcbArm{pool[i]});
  state_.epoch = 0;
  log.pool_size = static_cast<int>(state_.arms.size());
  log.evaluated = true;
  state_.phase = Phase::evaluate;
  spdlog::debug("iteration {}: {} children, pool of {}", t, children.size(), state_.arms.size());
  state_.pending_children.clear();
}

void IterativeOptimizer::evaluate_epoch() {
  const int t = state_.iteration + 1;
  const int epoch = state_.epoch + 1;
  UcbBandit bandit(state_.arms, cfg_.gamma, cfg_.reward_mode);
  const std::size_t arm = bandit.select(epoch);
  const std::string prompt_id = state_.arms[arm].prompt_id;
  const auto batch = sample_batch(train_, cfg_.batch_size, rng_);
  const auto outcomes = evaluate_batch(state_.entry(prompt_id).prompt.text, batch, backend_, cfg_);
  const double sum = batch_sum(outcomes);
  bandit.update(arm, sum, static_cast<int>(batch.size()));

  // Batch-atomic: state changes only after the whole batch resolved.
  record_transcripts("ucb", prompt_id, outcomes);
  state_.pulls.push_back(PullRecord{t, epoch, prompt_id, session_ids(batch), sum / static_cast<double>(batch.size())});
  state_.arms = bandit.arms();
  state_.epoch = epoch;
  if (epoch < cfg_.ucb_epochs) return;

  for (const auto& a : state_.arms) {
    ArchiveEntry& e = state_.entry(a.prompt_id);
    e.prompt.reward_sum = a.reward_sum;
    e.prompt.sessions_evaluated = a.sessions_evaluated;
    e.evaluations.push_back(EvaluationRecord{t, a.reward_sum, a.sessions_evaluated, a.pulls});
  }
  std::vector<std::string> next;
  for (std::size_t i : bandit.ranking()) {
    if (next.size() >= static_cast<std::size_t>(cfg_.beam_width)) break;
    next.push_back(state_.arms[i].prompt_id);
  }
  finish_iteration(std::move(next));
}

void IterativeOptimizer::finish_iteration(std::vector<std::string> next_beam) {
  state_.beam = std::move(next_beam);
  state_.arms.clear();
  state_.epoch = 0;
  ++state_.iteration;
  state_.beam_history.push_back(BeamSnapshot{state_.iteration, beam_members()});
  state_.phase = state_.iteration >= cfg_.opt_iterations ? Phase::finished : Phase::generate;
}

std::vector<BeamMember> IterativeOptimizer::beam_members() const {
  std::vector<BeamMember> out;
  for (const auto& id : state_.beam) {
    const PromptCandidate& p = state_.entry(id).prompt;
    double score = p.reward_sum;
    if (cfg_.reward_mode == RewardMode::mean) {
      const auto& evals = state_.entry(id).evaluations;
      const int pulls = evals.empty() ? 0 : evals.back().pulls;
      score = pulls > 0 ? p.reward_sum / pulls : 0.0;
    }
    out.push_back(BeamMember{id, score, p.reward_sum, p.sessions_evaluated});
  }
  return out;
}

BeamState IterativeOptimizer::beam_state() const {
  BeamState out;
  out.iteration = state_.iteration;
  for (const auto& id : state_.beam) out.beam.push_back(state_.entry(id).prompt);
  out.archive = state_.archive;
  return out;
}

BeamState iterate(const PromptCandidate& initial, std::span<const EvalCase> train, const OptimizerConfig& cfg,
                  ChatBackend& backend, SeededRng rng, const StepCallback& on_step) {
  IterativeOptimizer opt(cfg, train, backend, std::move(rng));
  opt.start(initial);
  while (!opt.finished()) {
    opt.step();
    if (on_step) on_step(opt.state());
  }
  return opt.beam_state();
}

EvaluationResult evaluate_prompt(std::string_view prompt_text, std::span<const EvalCase> cases, ChatBackend& backend,
                                 const OptimizerConfig& cfg) {
  if (cases.empty()) throw EmptyInput("no sessions to evaluate");
  std::vector<const EvalCase*> ptrs;
  ptrs.reserve(cases.size());
  for (const auto& c : cases) ptrs.push_back(&c);
  EvaluationResult out;
  out.outcomes = evaluate_batch(prompt_text, ptrs, backend, cfg);
  std::vector<SessionScore> scores;
  scores.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    scores.push_back(score_session(out.outcomes[i].rank, cases[i].candidates.size(), cfg.k_values));
  }
  out.report = aggregate(scores);
  return out;
}

namespace {

double metric_or_zero(const std::map<int, double>& m, int k) {
  const auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

}  // namespace

SelectionResult select_cross_domain(const std::map<std::string, PromptCandidate>& top_prompts,
                                    const std::map<std::string, std::vector<EvalCase>>& validation,
                                    const OptimizerConfig& cfg, ChatBackend& backend) {
  if (top_prompts.empty()) throw EmptyInput("cross-domain selection needs at least one domain");
  if (validation.empty()) throw EmptyInput("cross-domain selection needs validation sets");
  OptimizerConfig eval_cfg = cfg;
  if (std::find(eval_cfg.k_values.begin(), eval_cfg.k_values.end(), 5) == eval_cfg.k_values.end()) {
    eval_cfg.k_values.push_back(5);
  }

  SelectionResult best;
  bool have_best = false;
  for (const auto& [prompt_domain, prompt] : top_prompts) {
    double ndcg = 0.0;
    double hr = 0.0;
    for (const auto& [eval_domain, cases] : validation) {
      const auto result = evaluate_prompt(prompt.text, cases, backend, eval_cfg);
      ndcg += metric_or_zero(result.report.ndcg_at_k, 5);
      hr += metric_or_zero(result.report.hr_at_k, 5);
      best.matrix.push_back(CrossCell{prompt_domain, prompt.prompt_id, eval_domain, result.report});
    }
    ndcg /= static_cast<double>(validation.size());
    hr /= static_cast<double>(validation.size());
    const bool better = !have_best || std::tie(ndcg, hr) > std::tie(best.mean_ndcg5, best.mean_hr5) ||
                        (ndcg == best.mean_ndcg5 && hr == best.mean_hr5 && prompt.prompt_id < best.prompt.prompt_id);
    if (better) {
      best.domain = prompt_domain;
      best.prompt = prompt;
      best.mean_ndcg5 = ndcg;
      best.mean_hr5 = hr;
      have_best = true;
    }
  }
  return best;
}

std::string cross_matrix_csv(const SelectionResult& result) {
  std::string out = "prompt_domain,prompt_id,eval_domain,ndcg@5,hr@5\n";
  for (const auto& cell : result.matrix) {
    out += fmt::format("{},{},{},{:.6f},{:.6f}\n", cell.prompt_domain, cell.prompt_id, cell.eval_domain,
                       metric_or_zero(cell.report.ndcg_at_k, 5), metric_or_zero(cell.report.hr_at_k, 5));
  }
  return out;
}

}  // namespace promptopt
