#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptopt {

enum class RewardMode {
  accumulate,  // score is the running sum of batch means
  mean,        // that sum divided by the pull count
};

struct OptimizerConfig {
  int n_train = 50;
  int batch_size = 32;
  int reasons_per_error = 2;
  int beam_width = 4;
  int ucb_epochs = 16;
  int opt_iterations = 2;
  double gamma = 1.0;          // UCB exploration weight
  int ucb_pool_size = 8;
  int candidate_size = 20;
  std::vector<int> k_values{1, 5};
  std::vector<std::int64_t> seeds{0, 10, 42, 625, 2023};
  bool include_parents = true;
  RewardMode reward_mode = RewardMode::accumulate;
  int concurrency = 1;
  bool json_mode = false;
  double ranking_temperature = 0.0;     // ranking calls
  double generation_temperature = 1.0;  // reflection, refinement, augmentation

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// Parameters of the simulated LLM used for offline runs and tests.
struct MockConfig {
  double prior_low = 0.2;  // quality prior for unregistered prompts: U[low, high]
  double prior_high = 0.6;
  std::optional<double> initial_quality;  // pinned quality for the run's initial prompt
  double refine_gain_mean = 0.05;
  double refine_gain_sd = 0.02;
  double augment_noise = 0.02;
  double hallucination_rate = 0.05;

  friend bool operator==(const MockConfig&, const MockConfig&) = default;
};

struct RemoteConfig {
  std::string api_base = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key;  // taken from the environment; never written back out
  int max_attempts = 5;
  int backoff_base_ms = 1000;
  int requests_per_minute = 60;
  long call_budget = 0;  // 0 = unlimited
  int timeout_s = 60;
  int max_output_tokens = 1024;

  friend bool operator==(const RemoteConfig&, const RemoteConfig&) = default;
};

struct RunConfig {
  OptimizerConfig optimizer;
  MockConfig mock;
  RemoteConfig remote;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Returns `cfg` unchanged when every invariant holds; otherwise throws
/// ConfigError naming the first violated field.
OptimizerConfig validate_config(const OptimizerConfig& cfg);
void validate_config(const RunConfig& cfg);

// INI-style text: [optimizer], [mock] and [remote] sections with key = value
// lines whose keys are the struct field names. Lists are comma-separated.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
std::string to_config_text(const RunConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Applies PO_<FIELD> overrides (upper-cased field name, any section).
void apply_env_overrides(RunConfig& cfg, const EnvLookup& lookup);
std::optional<std::string> process_env(const std::string& name);

std::string_view to_string(RewardMode mode) noexcept;

}  // namespace promptopt
