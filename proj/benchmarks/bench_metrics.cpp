#include <benchmark/benchmark.h>

#include "promptopt/metrics.hpp"

namespace {

using promptopt::Rank;

void BM_ScoreSession(benchmark::State& state) {
  const std::vector<int> ks{1, 5, 10, 20};
  int r = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(promptopt::score_session(Rank{r}, 20, ks));
    r = r % 20 + 1;
  }
}
BENCHMARK(BM_ScoreSession);

void BM_Aggregate(benchmark::State& state) {
  const std::vector<int> ks{1, 5};
  std::vector<promptopt::SessionScore> scores;
  for (int i = 0; i < state.range(0); ++i) scores.push_back(promptopt::score_session(Rank{i % 20 + 1}, 20, ks));
  for (auto _ : state) benchmark::DoNotOptimize(promptopt::aggregate(scores));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Aggregate)->Arg(100)->Arg(2000);

}  // namespace
