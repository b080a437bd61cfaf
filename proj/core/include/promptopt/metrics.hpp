#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptopt/types.hpp"

namespace promptopt {

// 1-based position of the target in a returned ordering; empty when the
// response was hallucinated (no list, or the target missing from it).
using Rank = std::optional<int>;

Rank rank_of_target(std::span<const Item> ordering, const Item& target);

// Single-relevant-item NDCG: 1/log2(rank+1) if rank <= k, else 0.
double ndcg_at_k(Rank rank, int k);
int hr_at_k(Rank rank, int k);

// Full-list NDCG of the target; the per-session bandit reward.
double bandit_reward(Rank rank, int candidate_size);

// Bottom half of the re-ranked list, or no usable ranking at all.
bool is_error_case(Rank rank, int candidate_size);

struct SessionScore {
  Rank rank;
  std::map<int, int> hr;
  std::map<int, double> ndcg;
  double reward = 0.0;
};

SessionScore score_session(Rank rank, int candidate_size, std::span<const int> k_values);

struct AggregateReport {
  std::map<int, double> hr_at_k;
  std::map<int, double> ndcg_at_k;
  double hallucination_ratio = 0.0;
  int n_sessions = 0;
};

// Arithmetic means over every session, hallucinated ones included at zero.
// Throws EmptyInput on an empty span.
AggregateReport aggregate(std::span<const SessionScore> scores);

// Unweighted mean of per-seed reports (the "mean" row of an evaluation).
AggregateReport mean_report(std::span<const AggregateReport> reports);

// Column order: n_sessions, hr@k..., ndcg@k..., hallucination_ratio.
std::string report_csv_header(const AggregateReport& report);
std::string report_csv_row(const AggregateReport& report);
std::string report_to_json(const AggregateReport& report);

}  // namespace promptopt
