#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "promptopt/optimizer.hpp"

namespace promptopt::cli {

namespace fs = std::filesystem;

enum class RunStatus { running, completed, aborted, resumable };

std::string_view to_string(RunStatus status) noexcept;
RunStatus parse_run_status(std::string_view text);

struct RunManifest {
  std::string run_id;
  RunStatus status = RunStatus::running;
  std::string backend;
  std::uint64_t seed = 0;
  bool json_mode = false;
  std::string domain;
  std::string dataset_dir;
  std::string dataset_fingerprint;
  std::string config_text;
  std::string final_prompt_id;
  int iterations_completed = 0;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const fs::path& run_dir, const RunManifest& m);
// nullopt when the directory has no manifest.
std::optional<RunManifest> read_manifest(const fs::path& run_dir);

struct Checkpoint {
  std::string run_id;
  OptimizerState state;
  std::string backend_state;
};

void write_checkpoint(const fs::path& run_dir, const Checkpoint& ckpt);
std::optional<Checkpoint> read_checkpoint(const fs::path& run_dir);
// Backend snapshot only, without decoding the optimizer state.
std::optional<std::string> read_backend_state(const fs::path& run_dir);

// prompts/, archive.jsonl, pulls.jsonl, beam_history.jsonl, transcripts.jsonl.
void write_run_artifacts(const fs::path& run_dir, const OptimizerState& state);
// Removes everything a previous run may have left in the directory.
void clear_run_outputs(const fs::path& run_dir);

std::string prompt_file_text(const ArchiveEntry& entry);

}  // namespace promptopt::cli
