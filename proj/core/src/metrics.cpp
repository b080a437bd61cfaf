#include "promptopt/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "promptopt/errors.hpp"

namespace promptopt {

Rank rank_of_target(std::span<const Item> ordering, const Item& target) {
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (ordering[i].title == target.title) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

double ndcg_at_k(Rank rank, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  if (!rank || *rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

int hr_at_k(Rank rank, int k) {
  if (k < 1) throw std::invalid_argument("hr_at_k: k must be >= 1");
  return rank && *rank <= k ? 1 : 0;
}

double bandit_reward(Rank rank, int candidate_size) {
  if (candidate_size < 1) throw std::invalid_argument("bandit_reward: candidate_size must be >= 1");
  if (!rank) return 0.0;
  if (*rank < 1 || *rank > candidate_size) throw std::invalid_argument("bandit_reward: rank outside candidate set");
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

bool is_error_case(Rank rank, int candidate_size) {
  if (candidate_size < 2) throw std::invalid_argument("is_error_case: candidate_size must be >= 2");
  return !rank || *rank > candidate_size / 2;
}

SessionScore score_session(Rank rank, int candidate_size, std::span<const int> k_values) {
  SessionScore s;
  s.rank = rank;
  for (int k : k_values) {
    s.hr[k] = hr_at_k(rank, k);
    s.ndcg[k] = ndcg_at_k(rank, k);
  }
  s.reward = bandit_reward(rank, candidate_size);
  return s;
}

AggregateReport aggregate(std::span<const SessionScore> scores) {
  if (scores.empty()) throw EmptyInput("aggregate: no session scores");
  AggregateReport r;
  r.n_sessions = static_cast<int>(scores.size());
  int hallucinated = 0;
  for (const auto& s : scores) {
    if (!s.rank) ++hallucinated;
    for (const auto& [k, v] : s.hr) r.hr_at_k[k] += v;
    for (const auto& [k, v] : s.ndcg) r.ndcg_at_k[k] += v;
  }
  const double n = r.n_sessions;
  for (auto& [k, v] : r.hr_at_k) v /= n;
  for (auto& [k, v] : r.ndcg_at_k) v /= n;
  r.hallucination_ratio = hallucinated / n;
  return r;
}

AggregateReport mean_report(std::span<const AggregateReport> reports) {
  if (reports.empty()) throw EmptyInput("mean_report: no reports");
  AggregateReport m;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.hr_at_k) m.hr_at_k[k] += v;
    for (const auto& [k, v] : r.ndcg_at_k) m.ndcg_at_k[k] += v;
    m.hallucination_ratio += r.hallucination_ratio;
    m.n_sessions += r.n_sessions;
  }
  const double n = static_cast<double>(reports.size());
  for (auto& [k, v] : m.hr_at_k) v /= n;
  for (auto& [k, v] : m.ndcg_at_k) v /= n;
  m.hallucination_ratio /= n;
  m.n_sessions = static_cast<int>(std::lround(m.n_sessions / n));
  return m;
}

std::string report_csv_header(const AggregateReport& report) {
  std::string out = "n_sessions";
  for (const auto& [k, v] : report.hr_at_k) out += fmt::format(",hr@{}", k);
  for (const auto& [k, v] : report.ndcg_at_k) out += fmt::format(",ndcg@{}", k);
  out += ",hallucination_ratio";
  return out;
}

std::string report_csv_row(const AggregateReport& report) {
  std::string out = std::to_string(report.n_sessions);
  for (const auto& [k, v] : report.hr_at_k) out += fmt::format(",{:.6f}", v);
  for (const auto& [k, v] : report.ndcg_at_k) out += fmt::format(",{:.6f}", v);
  out += fmt::format(",{:.6f}", report.hallucination_ratio);
  return out;
}

std::string report_to_json(const AggregateReport& report) {
  std::string out = fmt::format("{{\"n_sessions\": {}", report.n_sessions);
  for (const auto& [k, v] : report.hr_at_k) out += fmt::format(", \"hr@{}\": {:.6f}", k, v);
  for (const auto& [k, v] : report.ndcg_at_k) out += fmt::format(", \"ndcg@{}\": {:.6f}", k, v);
  out += fmt::format(", \"hallucination_ratio\": {:.6f}}}", report.hallucination_ratio);
  return out;
}

}  // namespace promptopt
