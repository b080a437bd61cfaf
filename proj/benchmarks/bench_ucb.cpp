#include <vector>

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include "promptopt/optimizer.hpp"

namespace {

void BM_UcbSelectUpdate(benchmark::State& state) {
  std::vector<promptopt::UcbArm> arms;
  for (int i = 0; i < state.range(0); ++i) arms.push_back({fmt::format("p{:04d}", i)});
  promptopt::UcbBandit bandit(arms, 1.0, promptopt::RewardMode::accumulate);
  int epoch = 1;
  for (auto _ : state) {
    const auto arm = bandit.select(epoch++);
    bandit.update(arm, 0.25 * static_cast<double>(arm % 4), 32);
  }
}
BENCHMARK(BM_UcbSelectUpdate)->Arg(8)->Arg(64);

}  // namespace
