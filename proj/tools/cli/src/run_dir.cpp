#include "run_dir.hpp"

#include <fmt/format.h>

#include "promptopt/dataset.hpp"
#include "promptopt/errors.hpp"

namespace promptopt::cli {

using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kCheckpoint = "checkpoint.json";

std::optional<json> read_json_file(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(fmt::format("{} is not valid JSON", path.string()));
  return j;
}

}  // namespace

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::completed: return "completed";
    case RunStatus::aborted: return "aborted";
    case RunStatus::resumable: return "resumable";
  }
  return "unknown";
}

RunStatus parse_run_status(std::string_view text) {
  if (text == "running") return RunStatus::running;
  if (text == "completed") return RunStatus::completed;
  if (text == "aborted") return RunStatus::aborted;
  if (text == "resumable") return RunStatus::resumable;
  throw Error(fmt::format("unknown run status '{}'", text));
}

json manifest_to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},
          {"status", to_string(m.status)},
          {"backend", m.backend},
          {"seed", m.seed},
          {"json_mode", m.json_mode},
          {"domain", m.domain},
          {"dataset_dir", m.dataset_dir},
          {"dataset_fingerprints", {{m.domain, m.dataset_fingerprint}}},
          {"config", m.config_text},
          {"final_prompt_id", m.final_prompt_id},
          {"iterations_completed", m.iterations_completed}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.status = parse_run_status(j.at("status").get<std::string>());
    m.backend = j.at("backend").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.json_mode = j.at("json_mode").get<bool>();
    m.domain = j.at("domain").get<std::string>();
    m.dataset_dir = j.at("dataset_dir").get<std::string>();
    m.dataset_fingerprint = j.at("dataset_fingerprints").value(m.domain, std::string{});
    m.config_text = j.at("config").get<std::string>();
    m.final_prompt_id = j.at("final_prompt_id").get<std::string>();
    m.iterations_completed = j.at("iterations_completed").get<int>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  write_file_atomic(run_dir / kManifest, manifest_to_json(m).dump(2) + "\n");
}

std::optional<RunManifest> read_manifest(const fs::path& run_dir) {
  auto j = read_json_file(run_dir / kManifest);
  if (!j) return std::nullopt;
  return manifest_from_json(*j);
}

void write_checkpoint(const fs::path& run_dir, const Checkpoint& ckpt) {
  json j = {{"run_id", ckpt.run_id},
            {"optimizer", json::parse(state_to_json(ckpt.state))},
            {"backend", json::parse(ckpt.backend_state)}};
  write_file_atomic(run_dir / kCheckpoint, j.dump());
}

std::optional<Checkpoint> read_checkpoint(const fs::path& run_dir) {
  auto j = read_json_file(run_dir / kCheckpoint);
  if (!j) return std::nullopt;
  try {
    return Checkpoint{j->at("run_id").get<std::string>(), state_from_json(j->at("optimizer").dump()),
                      j->at("backend").dump()};
  } catch (const json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

std::optional<std::string> read_backend_state(const fs::path& run_dir) {
  auto j = read_json_file(run_dir / kCheckpoint);
  if (!j || !j->contains("backend")) return std::nullopt;
  return j->at("backend").dump();
}

std::string prompt_file_text(const ArchiveEntry& entry) {
  const auto& p = entry.prompt;
  std::string out = fmt::format("# prompt_id: {}\n# origin: {}\n# parent: {}\n# iteration: {}\n", p.prompt_id,
                                to_string(p.origin), p.parent_id.value_or("none"), p.iteration_born);
  for (const auto& ev : entry.evaluations) {
    out += fmt::format("# evaluated in iteration {}: R={:.6f} S={} pulls={}\n", ev.iteration, ev.reward_sum,
                       ev.sessions_evaluated, ev.pulls);
  }
  out += p.text;
  if (!p.text.ends_with('\n')) out += '\n';
  return out;
}

void write_run_artifacts(const fs::path& run_dir, const OptimizerState& state) {
  fs::create_directories(run_dir / "prompts");
  for (const auto& e : state.archive) {
    write_file_atomic(run_dir / "prompts" / (e.prompt.prompt_id + ".txt"), prompt_file_text(e));
  }
  write_file_atomic(run_dir / "archive.jsonl", archive_jsonl(state));
  write_file_atomic(run_dir / "pulls.jsonl", pulls_jsonl(state));

  std::string history;
  for (const auto& snap : state.beam_history) {
    json members = json::array();
    for (const auto& m : snap.members) {
      members.push_back({{"id", m.prompt_id}, {"score", m.score}, {"R", m.reward_sum}, {"S", m.sessions_evaluated}});
    }
    history += json{{"iteration", snap.iteration}, {"members", members}}.dump() + "\n";
  }
  write_file_atomic(run_dir / "beam_history.jsonl", history);

  std::string transcripts;
  for (const auto& t : state.transcripts) {
    json j = {{"iteration", t.iteration},
              {"phase", t.phase},
              {"prompt_id", t.prompt_id},
              {"session_id", t.session_id},
              {"rank", t.rank ? json(*t.rank) : json(nullptr)},
              {"verdict", to_string(t.verdict)},
              {"raw", t.raw}};
    transcripts += j.dump() + "\n";
  }
  write_file_atomic(run_dir / "transcripts.jsonl", transcripts);
}

void clear_run_outputs(const fs::path& run_dir) {
  fs::remove_all(run_dir / "prompts");
  for (const char* name : {"archive.jsonl", "pulls.jsonl", "beam_history.jsonl", "transcripts.jsonl", kCheckpoint,
                           "final_prompt.txt", kManifest, "config.ini"}) {
    fs::remove(run_dir / name);
  }
}

}  // namespace promptopt::cli
