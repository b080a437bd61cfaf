#include <string>
#include <vector>

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include "promptopt/parser.hpp"

namespace {

promptopt::CandidateSet candidates(int n) {
  promptopt::CandidateSet cs;
  for (int i = 1; i <= n; ++i) cs.items.push_back({i, fmt::format("Wireless Gaming Headset Model {:03d}", i)});
  cs.target_position = n / 2;
  return cs;
}

void BM_ParseFreeText(benchmark::State& state) {
  const auto cs = candidates(20);
  std::vector<promptopt::Item> order(cs.items.rbegin(), cs.items.rend());
  const std::string text = "Here is my ranking:\n" + promptopt::render_ranking_answer(order, false);
  for (auto _ : state) benchmark::DoNotOptimize(promptopt::parse_ranking(text, cs, false));
}
BENCHMARK(BM_ParseFreeText);

void BM_ParseJson(benchmark::State& state) {
  const auto cs = candidates(20);
  const std::string text = promptopt::render_ranking_answer(cs.items, true);
  for (auto _ : state) benchmark::DoNotOptimize(promptopt::parse_ranking(text, cs, true));
}
BENCHMARK(BM_ParseJson);

void BM_MatchTitleFuzzy(benchmark::State& state) {
  const auto cs = candidates(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(promptopt::match_title("wireless gaming headset modl 007", cs.items));
}
BENCHMARK(BM_MatchTitleFuzzy)->Arg(20)->Arg(100);

}  // namespace
