#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "promptopt/errors.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/rng.hpp"

using namespace promptopt;

namespace {

// DCG of a binary relevance vector with the single relevant item at `rank`,
// divided by the ideal DCG, cut at k.
double dcg_oracle(int rank, int size, int k) {
  std::vector<int> rel(static_cast<std::size_t>(size), 0);
  rel[static_cast<std::size_t>(rank - 1)] = 1;
  double dcg = 0.0;
  for (int i = 0; i < std::min(k, size); ++i) dcg += (std::pow(2.0, rel[i]) - 1.0) / std::log2(i + 2.0);
  const double idcg = 1.0;  // relevant item first
  return dcg / idcg;
}

std::vector<Item> titled(std::initializer_list<const char*> titles) {
  std::vector<Item> out;
  int i = 1;
  for (const char* t : titles) out.push_back(Item{i++, t});
  return out;
}

}  // namespace

TEST(Metrics, RankOfTarget) {
  const auto list = titled({"a", "b", "c"});
  EXPECT_EQ(rank_of_target(list, Item{9, "a"}), 1);
  EXPECT_EQ(rank_of_target(list, Item{1, "c"}), 3);
  EXPECT_EQ(rank_of_target(list, Item{1, "z"}), std::nullopt);

  std::vector<Item> twenty;
  for (int i = 1; i <= 20; ++i) twenty.push_back(Item{i, "t" + std::to_string(i)});
  EXPECT_EQ(rank_of_target(twenty, Item{1, "t16"}), 16);
}

TEST(Metrics, NdcgExamples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(1, 5), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(3, 5), 0.5);
  EXPECT_DOUBLE_EQ(ndcg_at_k(11, 5), 0.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(std::nullopt, 5), 0.0);
  EXPECT_THROW(ndcg_at_k(1, 0), std::invalid_argument);
}

TEST(Metrics, HitRateBoundaries) {
  EXPECT_EQ(hr_at_k(5, 5), 1);
  EXPECT_EQ(hr_at_k(6, 5), 0);
  EXPECT_EQ(hr_at_k(std::nullopt, 1), 0);
  EXPECT_THROW(hr_at_k(1, 0), std::invalid_argument);
}

TEST(Metrics, BanditRewardIsFullListNdcg) {
  EXPECT_DOUBLE_EQ(bandit_reward(1, 20), 1.0);
  EXPECT_NEAR(bandit_reward(19, 20), 0.231378, 1e-6);
  EXPECT_DOUBLE_EQ(bandit_reward(std::nullopt, 20), 0.0);
}

TEST(Metrics, MatchesBruteForceDcg) {
  for (int size = 1; size <= 40; ++size) {
    for (int rank = 1; rank <= size; ++rank) {
      for (int k : {1, 3, 5, 10, 20, 40}) {
        ASSERT_NEAR(ndcg_at_k(rank, k), dcg_oracle(rank, size, k), 1e-12) << rank << "/" << size << "@" << k;
      }
      ASSERT_NEAR(bandit_reward(rank, size), dcg_oracle(rank, size, size), 1e-12);
    }
  }
}

TEST(Metrics, MonotoneInRankAndNestedInCutoff) {
  for (int k = 1; k <= 20; ++k) {
    for (int r = 1; r < 40; ++r) {
      ASSERT_GE(ndcg_at_k(r, k), ndcg_at_k(r + 1, k));
      ASSERT_GE(hr_at_k(r, k), hr_at_k(r + 1, k));
      ASSERT_LE(ndcg_at_k(r, k), ndcg_at_k(r, k + 1));
      ASSERT_LE(hr_at_k(r, k), hr_at_k(r, k + 1));
    }
  }
}

TEST(Metrics, ErrorCaseRule) {
  EXPECT_TRUE(is_error_case(16, 20));
  EXPECT_TRUE(is_error_case(11, 20));
  EXPECT_FALSE(is_error_case(10, 20));
  EXPECT_TRUE(is_error_case(std::nullopt, 20));
  EXPECT_FALSE(is_error_case(2, 5));
  EXPECT_TRUE(is_error_case(3, 5));
  EXPECT_THROW(is_error_case(1, 1), std::invalid_argument);
}

TEST(Metrics, SessionScoreInvariants) {
  const std::vector<int> ks{1, 5, 10};
  const auto absent = score_session(std::nullopt, 20, ks);
  for (int k : ks) {
    EXPECT_EQ(absent.hr.at(k), 0);
    EXPECT_EQ(absent.ndcg.at(k), 0.0);
  }
  EXPECT_EQ(absent.reward, 0.0);
  const auto top = score_session(1, 20, ks);
  for (int k : ks) EXPECT_EQ(top.ndcg.at(k), 1.0);
  EXPECT_EQ(top.reward, 1.0);
}

TEST(Metrics, AggregateTwoPointMean) {
  const std::vector<int> ks{1};
  const std::vector<SessionScore> scores{score_session(1, 20, ks), score_session(std::nullopt, 20, ks)};
  const auto report = aggregate(scores);
  EXPECT_DOUBLE_EQ(report.hr_at_k.at(1), 0.5);
  EXPECT_DOUBLE_EQ(report.hallucination_ratio, 0.5);
  EXPECT_EQ(report.n_sessions, 2);
  EXPECT_THROW(aggregate(std::span<const SessionScore>{}), EmptyInput);
}

TEST(Metrics, AggregateMatchesBruteForceMean) {
  SeededRng rng(2024, "ranks");
  const std::vector<int> ks{1, 5};
  std::vector<SessionScore> scores;
  double brute = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int r = static_cast<int>(rng.uniform_int(1, 20));
    scores.push_back(score_session(r, 20, ks));
    brute += r <= 5 ? 1.0 / std::log2(r + 1.0) : 0.0;
  }
  EXPECT_NEAR(aggregate(scores).ndcg_at_k.at(5), brute / 1000.0, 1e-12);
}

TEST(Metrics, MeanReportAndCsvColumns) {
  const std::vector<int> ks{1, 5};
  const std::vector<SessionScore> a{score_session(1, 20, ks)};
  const std::vector<SessionScore> b{score_session(std::nullopt, 20, ks)};
  const std::vector<AggregateReport> reports{aggregate(a), aggregate(b)};
  const auto mean = mean_report(reports);
  EXPECT_DOUBLE_EQ(mean.hr_at_k.at(1), 0.5);
  EXPECT_DOUBLE_EQ(mean.hallucination_ratio, 0.5);
  EXPECT_EQ(report_csv_header(mean), "n_sessions,hr@1,hr@5,ndcg@1,ndcg@5,hallucination_ratio");
  EXPECT_EQ(report_csv_row(reports[0]), "1,1.000000,1.000000,1.000000,1.000000,0.000000");
}
