#include "commands.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptopt/dataset.hpp"
#include "promptopt/errors.hpp"
#include "promptopt/hashing.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/mock_oracle.hpp"
#include "promptopt/optimizer.hpp"
#include "promptopt/prompts.hpp"
#include "promptopt/remote_backend.hpp"
#include "run_dir.hpp"

namespace promptopt::cli {

using nlohmann::json;

RunConfig resolve_config(const GlobalOptions& g, const Io& io) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  apply_env_overrides(cfg, io.env);
  if (g.concurrency) cfg.optimizer.concurrency = *g.concurrency;
  if (g.json_mode) cfg.optimizer.json_mode = true;
  validate_config(cfg);
  return cfg;
}

std::unique_ptr<ChatBackend> make_backend(BackendKind kind, const RunConfig& cfg, std::uint64_t seed,
                                          long call_budget) {
  if (kind == BackendKind::mock) {
    auto mock = std::make_unique<MockOracle>(cfg.mock, seed);
    mock->set_call_budget(call_budget);
    return mock;
  }
  if (cfg.remote.api_key.empty()) throw ConfigError("api_key", "PO_API_KEY must be set for the remote backend");
  RemoteConfig remote = cfg.remote;
  if (call_budget > 0) remote.call_budget = call_budget;
  return std::make_unique<RemoteBackend>(remote, std::make_unique<HttplibTransport>(remote.timeout_s),
                                         Clock::system(), seed);
}

namespace {

fs::path require_out(const GlobalOptions& g) {
  if (g.out.empty()) throw IoError("--out is required");
  fs::create_directories(g.out);
  return fs::path(g.out);
}

MockOracle* as_mock(ChatBackend& backend) { return dynamic_cast<MockOracle*>(&backend); }

std::string read_prompt_file(const fs::path& path) {
  if (!fs::exists(path)) throw IoError(fmt::format("prompt file not found: {}", path.string()));
  std::string text = read_file(path);
  // Lineage headers written next to each prompt are not part of it.
  std::istringstream in(text);
  std::string line;
  std::string body;
  bool header = true;
  while (std::getline(in, line)) {
    if (header && line.starts_with("# ")) continue;
    header = false;
    body += line;
    body += '\n';
  }
  while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
  if (body.empty()) throw EmptyPrompt(fmt::format("prompt file is empty: {}", path.string()));
  return body;
}

void import_run_qualities(ChatBackend& backend, const fs::path& run_dir) {
  MockOracle* mock = as_mock(backend);
  if (!mock) return;
  if (auto state = read_backend_state(run_dir)) mock->import_qualities(*state);
}

std::string compute_run_id(const RunConfig& cfg, const PreparedDataset& data, std::uint64_t seed,
                           std::string_view backend, std::string_view initial_text) {
  std::uint64_t h = fnv1a64(to_config_text(cfg));
  h = hash_combine(h, data.fingerprint);
  h = hash_combine(h, seed);
  h = hash_combine(h, fnv1a64(backend));
  h = hash_combine(h, fnv1a64(initial_text));
  return "run-" + to_hex(h);
}

}  // namespace

int cmd_prepare(const GlobalOptions& g, const PrepareOptions& o, const Io& io) {
  const RunConfig cfg = resolve_config(g, io);
  if (o.domain.empty()) throw IoError("--domain is required");
  const auto events = load_events(o.input, parse_event_format(o.format));
  std::vector<std::int64_t> seeds = cfg.optimizer.seeds;
  if (o.single_seed) seeds = {static_cast<std::int64_t>(g.seed)};
  const PreparedDataset data = prepare_dataset(events, o.domain, cfg.optimizer.candidate_size, seeds, o.min_length);

  StatsAccumulator acc;
  for (const auto* part : {&data.split.train, &data.split.validation, &data.split.test}) {
    for (const auto& s : *part) acc.add(s);
  }
  const DatasetStats stats = acc.finish();
  const fs::path out = require_out(g);
  save_prepared_dataset(data, stats, out);

  io.out << fmt::format("domain {}: {} sessions ({} train / {} validation / {} test), {} items\n", data.domain,
                        stats.n_sessions, data.split.train.size(), data.split.validation.size(),
                        data.split.test.size(), stats.n_items);
  io.out << fmt::format("average length {:.4f}, density indicator {:.2f}\n", stats.avg_session_length,
                        stats.density_indicator);
  return kOk;
}

int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o, const Io& io) {
  const RunConfig cfg = resolve_config(g, io);
  const BackendKind kind = parse_backend_kind(g.backend);
  if (o.data.empty()) throw IoError("--data is required");
  const PreparedDataset data = load_prepared_dataset(o.data);
  const fs::path run_dir = require_out(g);

  SeededRng subset_rng = derive_rng(g.seed, "train-subset");
  const auto subset = subsample_sessions(data.split.train, static_cast<std::size_t>(cfg.optimizer.n_train),
                                         subset_rng);
  if (subset.size() < static_cast<std::size_t>(cfg.optimizer.n_train)) {
    spdlog::warn("only {} training sessions available, n_train is {}", subset.size(), cfg.optimizer.n_train);
  }
  const auto cases = make_eval_cases(subset, data, static_cast<std::int64_t>(g.seed));

  const std::string initial_text =
      o.initial_prompt.empty() ? std::string(prompts::kIntentTaskDescription) : read_prompt_file(o.initial_prompt);
  const std::string run_id = compute_run_id(cfg, data, g.seed, to_string(kind), initial_text);

  auto backend = make_backend(kind, cfg, g.seed, o.call_budget);
  if (MockOracle* mock = as_mock(*backend)) mock->register_sessions(subset);

  RunManifest manifest;
  manifest.run_id = run_id;
  manifest.backend = std::string(to_string(kind));
  manifest.seed = g.seed;
  manifest.json_mode = cfg.optimizer.json_mode;
  manifest.domain = data.domain;
  manifest.dataset_dir = fs::weakly_canonical(o.data).string();
  manifest.dataset_fingerprint = to_hex(data.fingerprint);
  manifest.config_text = to_config_text(cfg);

  IterativeOptimizer opt(cfg.optimizer, cases, *backend, derive_rng(g.seed, "optimizer"));

  const auto previous = read_manifest(run_dir);
  const bool can_resume = !o.fresh && previous && previous->run_id == run_id &&
                          previous->status != RunStatus::completed;
  std::optional<Checkpoint> ckpt;
  if (can_resume) ckpt = read_checkpoint(run_dir);
  if (ckpt && ckpt->run_id == run_id) {
    backend->restore_state(ckpt->backend_state);
    opt.resume(std::move(ckpt->state));
    io.out << fmt::format("resuming {} at iteration {} ({})\n", run_id, opt.state().iteration + 1,
                          to_string(opt.state().phase));
  } else {
    clear_run_outputs(run_dir);
    if (MockOracle* mock = as_mock(*backend); mock && cfg.mock.initial_quality) {
      mock->register_quality(initial_text, *cfg.mock.initial_quality);
    }
    opt.start(make_initial_prompt("p0000", initial_text));
  }
  write_file_atomic(run_dir / "config.ini", manifest.config_text);

  auto save = [&](RunStatus status) {
    manifest.status = status;
    manifest.iterations_completed = opt.state().iteration;
    write_manifest(run_dir, manifest);
  };
  write_checkpoint(run_dir, Checkpoint{run_id, opt.state(), backend->snapshot_state()});
  save(RunStatus::running);

  try {
    while (!opt.finished()) {
      opt.step();
      write_checkpoint(run_dir, Checkpoint{run_id, opt.state(), backend->snapshot_state()});
    }
  } catch (const BackendError& e) {
    write_run_artifacts(run_dir, opt.state());
    save(RunStatus::resumable);
    io.err << fmt::format("backend failure{}: {}\n",
                          e.session_id().empty() ? std::string() : " on session " + e.session_id(), e.what());
    io.err << fmt::format("run {} is resumable; rerun the same command to continue\n", run_id);
    return kResumable;
  }

  write_run_artifacts(run_dir, opt.state());
  const BeamState beam = opt.beam_state();
  const PromptCandidate& best = beam.beam.front();
  write_file_atomic(run_dir / "final_prompt.txt", best.text + "\n");
  manifest.final_prompt_id = best.prompt_id;
  save(RunStatus::completed);

  io.out << fmt::format("run {} completed: {} iterations, {} prompts, best {} (R={:.4f}, S={})\n", run_id,
                        beam.iteration, beam.archive.size(), best.prompt_id, best.reward_sum,
                        best.sessions_evaluated);
  return kOk;
}

int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o, const Io& io) {
  RunConfig cfg = resolve_config(g, io);
  const BackendKind kind = parse_backend_kind(g.backend);
  if (o.data.empty()) throw IoError("--data is required");
  const std::string prompt_text = read_prompt_file(o.prompt);
  const PreparedDataset data = load_prepared_dataset(o.data);
  const auto& sessions = data.sessions(o.split);
  if (sessions.empty()) throw EmptyInput(fmt::format("split '{}' has no sessions", o.split));
  const std::vector<std::int64_t> seeds = o.seeds.empty() ? cfg.optimizer.seeds : o.seeds;
  const fs::path out = require_out(g);

  auto backend = make_backend(kind, cfg, g.seed, 0);
  for (const auto& run : o.from_runs) import_run_qualities(*backend, run);
  if (MockOracle* mock = as_mock(*backend)) {
    mock->register_sessions(sessions);
    if (o.quality) mock->register_quality(prompt_text, *o.quality);
  }

  std::vector<AggregateReport> reports;
  std::string csv;
  for (std::int64_t seed : seeds) {
    const auto cases = make_eval_cases(sessions, data, seed);
    const auto result = evaluate_prompt(prompt_text, cases, *backend, cfg.optimizer);
    if (csv.empty()) csv = "seed," + report_csv_header(result.report) + "\n";
    csv += fmt::format("{},{}\n", seed, report_csv_row(result.report));
    reports.push_back(result.report);
  }
  const AggregateReport mean = mean_report(reports);
  csv += "mean," + report_csv_row(mean) + "\n";
  write_file_atomic(out / "report.csv", csv);

  json per_seed = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    per_seed.push_back({{"seed", seeds[i]}, {"report", json::parse(report_to_json(reports[i]))}});
  }
  const json report = {{"per_seed", per_seed}, {"mean", json::parse(report_to_json(mean))}};
  write_file_atomic(out / "report.json", report.dump(2) + "\n");
  const json manifest = {{"command", "evaluate"},
                         {"backend", to_string(kind)},
                         {"json_mode", cfg.optimizer.json_mode},
                         {"split", o.split},
                         {"domain", data.domain},
                         {"dataset_fingerprint", to_hex(data.fingerprint)},
                         {"prompt_fingerprint", to_hex(prompt_fingerprint(prompt_text))},
                         {"seeds", seeds}};
  write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  io.out << csv;
  return kOk;
}

int cmd_select(const GlobalOptions& g, const SelectOptions& o, const Io& io) {
  RunConfig cfg = resolve_config(g, io);
  const BackendKind kind = parse_backend_kind(g.backend);
  if (o.runs.empty()) throw IoError("--run is required at least once");
  if (!o.validation.empty() && o.validation.size() != o.runs.size()) {
    throw IoError("--validation must be given once per --run");
  }

  struct Domain {
    RunManifest manifest;
    fs::path run_dir;
    fs::path data_dir;
  };
  std::vector<Domain> domains;
  for (std::size_t i = 0; i < o.runs.size(); ++i) {
    const fs::path run_dir(o.runs[i]);
    const auto manifest = read_manifest(run_dir);
    if (!manifest) throw IoError(fmt::format("{} has no manifest.json", run_dir.string()));
    if (manifest->status != RunStatus::completed || !fs::exists(run_dir / "final_prompt.txt")) {
      io.err << fmt::format("run {} is not completed (status {})\n", run_dir.string(), to_string(manifest->status));
      return kIncomplete;
    }
    domains.push_back(Domain{*manifest, run_dir, o.validation.empty() ? fs::path(manifest->dataset_dir)
                                                                       : fs::path(o.validation[i])});
  }
  const fs::path out = require_out(g);

  auto backend = make_backend(kind, cfg, g.seed, 0);
  std::map<std::string, PromptCandidate> top;
  std::map<std::string, std::vector<EvalCase>> validation;
  for (const auto& d : domains) {
    import_run_qualities(*backend, d.run_dir);
    const std::string text = read_prompt_file(d.run_dir / "final_prompt.txt");
    if (!top.emplace(d.manifest.domain, make_initial_prompt(d.manifest.final_prompt_id, text)).second) {
      throw IoError(fmt::format("two runs share domain '{}'", d.manifest.domain));
    }
    const PreparedDataset data = load_prepared_dataset(d.data_dir);
    const auto& sessions = data.sessions("validation");
    if (MockOracle* mock = as_mock(*backend)) mock->register_sessions(sessions);
    validation.emplace(data.domain, make_eval_cases(sessions, data, static_cast<std::int64_t>(g.seed)));
  }

  const SelectionResult result = select_cross_domain(top, validation, cfg.optimizer, *backend);
  write_file_atomic(out / "final_prompt.txt", result.prompt.text + "\n");
  write_file_atomic(out / "cross_matrix.csv", cross_matrix_csv(result));
  const json selection = {{"domain", result.domain},
                          {"prompt_id", result.prompt.prompt_id},
                          {"mean_ndcg@5", result.mean_ndcg5},
                          {"mean_hr@5", result.mean_hr5}};
  write_file_atomic(out / "selection.json", selection.dump(2) + "\n");

  io.out << fmt::format("{:<16} {:<10} {:<16} {:>8} {:>8}\n", "prompt_domain", "prompt", "eval_domain", "ndcg@5",
                        "hr@5");
  for (const auto& cell : result.matrix) {
    io.out << fmt::format("{:<16} {:<10} {:<16} {:>8.4f} {:>8.4f}\n", cell.prompt_domain, cell.prompt_id,
                          cell.eval_domain, cell.report.ndcg_at_k.at(5), cell.report.hr_at_k.at(5));
  }
  io.out << fmt::format("selected {} from {} (mean ndcg@5 {:.4f}, mean hr@5 {:.4f})\n", result.prompt.prompt_id,
                        result.domain, result.mean_ndcg5, result.mean_hr5);
  return kOk;
}

namespace {

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(fmt::format("{}: malformed line", path.string()));
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

int cmd_report(const GlobalOptions& /*g*/, const ReportOptions& o, const Io& io) {
  const fs::path run_dir(o.run);
  if (!fs::is_directory(run_dir)) throw IoError(fmt::format("run directory not found: {}", run_dir.string()));
  for (const char* name : {"archive.jsonl", "beam_history.jsonl"}) {
    if (!fs::exists(run_dir / name)) throw IoError(fmt::format("{} is missing {}", run_dir.string(), name));
  }
  const auto archive = read_jsonl(run_dir / "archive.jsonl");
  if (archive.empty()) {
    io.out << "no prompts recorded\n";
    return kOk;
  }
  if (auto m = read_manifest(run_dir)) {
    io.out << fmt::format("run {} ({}, {} backend, seed {})\n\n", m->run_id, to_string(m->status), m->backend,
                          m->seed);
  }

  io.out << "Beam evolution\n";
  io.out << fmt::format("{:>9}  {:<8} {:>12} {:>6}\n", "iteration", "prompt", "R", "S");
  for (const auto& snap : read_jsonl(run_dir / "beam_history.jsonl")) {
    for (const auto& m : snap.at("members")) {
      io.out << fmt::format("{:>9}  {:<8} {:>12.6f} {:>6}\n", snap.at("iteration").get<int>(),
                            m.at("id").get<std::string>(), m.at("R").get<double>(), m.at("S").get<long>());
    }
  }

  io.out << "\nLineage\n";
  std::map<std::string, std::vector<const json*>> children;
  std::vector<const json*> roots;
  for (const auto& p : archive) {
    if (p.at("parent").is_null()) {
      roots.push_back(&p);
    } else {
      children[p.at("parent").get<std::string>()].push_back(&p);
    }
  }
  std::function<void(const json&, int)> print = [&](const json& p, int depth) {
    const std::string id = p.at("id").get<std::string>();
    io.out << fmt::format("{:{}}{} {} (iteration {}, R={:.6f}, S={})\n", "", depth * 2, id,
                          p.at("origin").get<std::string>(), p.at("iteration").get<int>(), p.at("R").get<double>(),
                          p.at("S").get<long>());
    if (auto it = children.find(id); it != children.end()) {
      for (const json* c : it->second) print(*c, depth + 1);
    }
  };
  for (const json* r : roots) print(*r, 0);

  if (o.transcripts) {
    if (!fs::exists(run_dir / "transcripts.jsonl")) {
      throw IoError(fmt::format("{} is missing transcripts.jsonl", run_dir.string()));
    }
    io.out << "\nTranscripts\n";
    for (const auto& t : read_jsonl(run_dir / "transcripts.jsonl")) {
      const std::string rank = t.at("rank").is_null() ? "none" : std::to_string(t.at("rank").get<int>());
      io.out << fmt::format("=== session {} | prompt {} | iteration {} | {} | rank {} | {}\n",
                            t.at("session_id").get<std::string>(), t.at("prompt_id").get<std::string>(),
                            t.at("iteration").get<int>(), t.at("phase").get<std::string>(), rank,
                            t.at("verdict").get<std::string>());
      io.out << t.at("raw").get<std::string>() << "\n";
    }
  }
  return kOk;
}

}  // namespace promptopt::cli
