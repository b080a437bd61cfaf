#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/cli.hpp"
#include "promptopt/config.hpp"
#include "promptopt/llm.hpp"

namespace promptopt::cli {

struct GlobalOptions {
  std::string config_path;
  std::string backend = "mock";
  std::uint64_t seed = 0;
  std::string out;
  std::optional<int> concurrency;
  bool json_mode = false;
};

struct PrepareOptions {
  std::string input;
  std::string format = "csv";
  std::string domain;
  int min_length = 2;
  bool single_seed = false;  // only the --seed candidate file
};

struct OptimizeOptions {
  std::string data;
  std::string initial_prompt;
  long call_budget = 0;
  bool fresh = false;
};

struct EvaluateOptions {
  std::string prompt;
  std::string data;
  std::string split = "test";
  std::vector<std::int64_t> seeds;
  std::optional<double> quality;
  std::vector<std::string> from_runs;
};

struct SelectOptions {
  std::vector<std::string> runs;
  std::vector<std::string> validation;
};

struct ReportOptions {
  std::string run;
  bool transcripts = false;
};

// Config file (if any), then PO_* environment, then command-line flags.
RunConfig resolve_config(const GlobalOptions& g, const Io& io);

std::unique_ptr<ChatBackend> make_backend(BackendKind kind, const RunConfig& cfg, std::uint64_t seed,
                                          long call_budget);

int cmd_prepare(const GlobalOptions& g, const PrepareOptions& o, const Io& io);
int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o, const Io& io);
int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o, const Io& io);
int cmd_select(const GlobalOptions& g, const SelectOptions& o, const Io& io);
int cmd_report(const GlobalOptions& g, const ReportOptions& o, const Io& io);

}  // namespace promptopt::cli
