#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "promptopt/cli.hpp"
#include "promptopt/dataset.hpp"
#include "synthetic.hpp"

namespace promptopt {
namespace {

namespace fs = std::filesystem;
using synth::TempDir;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "promptopt");
  cli::Io io{out, err, [](const std::string&) -> std::optional<std::string> { return std::nullopt; }};
  const int code = cli::run(args, io);
  return Result{code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_file(p); }

// A small interaction log and its prepared dataset.
struct Fixture {
  TempDir tmp;
  fs::path events;
  fs::path data;
  fs::path config;

  explicit Fixture(const std::string& tag, const std::string& domain = "toys", std::uint64_t seed = 1)
      : tmp(tag) {
    events = tmp / "events.csv";
    const auto ev = synth::make_events(60, 3, 150, seed);
    write_file_atomic(events, synth::events_csv(ev));
    config = tmp / "config.ini";
    write_file_atomic(config, "[mock]\nhallucination_rate = 0\ninitial_quality = 0.3\n");
    data = tmp / "data";
    const auto r = run_cli({"--seed", "0", "--out", data.string(), "prepare", "--input", events.string(), "--domain",
                            domain});
    EXPECT_EQ(r.code, 0) << r.err;
  }
};

TEST(CliPrepareTest, WritesSplitsAndCandidateFiles) {
  Fixture f("cli-prepare");
  for (const char* name : {"sessions_train.jsonl", "sessions_validation.jsonl", "sessions_test.jsonl", "stats.json",
                           "dataset.json"}) {
    EXPECT_TRUE(fs::exists(f.data / name)) << name;
  }
  int candidate_files = 0;
  for (const auto& e : fs::directory_iterator(f.data)) {
    candidate_files += e.path().filename().string().starts_with("candidates_seed");
  }
  EXPECT_EQ(candidate_files, 5);
}

TEST(CliPrepareTest, RerunIsByteIdentical) {
  Fixture f("cli-prepare-rerun");
  const auto again = f.tmp / "again";
  const auto r = run_cli({"--seed", "0", "--out", again.string(), "prepare", "--input", f.events.string(), "--domain",
                          "toys"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& e : fs::directory_iterator(f.data)) {
    EXPECT_EQ(slurp(e.path()), slurp(again / e.path().filename())) << e.path().filename();
  }
}

TEST(CliPrepareTest, MissingInputIsExit2) {
  TempDir tmp("cli-missing");
  const auto r = run_cli({"--out", (tmp / "d").string(), "prepare", "--input", (tmp / "nope.csv").string(),
                          "--domain", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliPrepareTest, MalformedInputIsExit2) {
  TempDir tmp("cli-malformed");
  write_file_atomic(tmp / "bad.csv", "user_id,item_title,timestamp\nu1,Item,notanumber\n");
  const auto r = run_cli({"--out", (tmp / "d").string(), "prepare", "--input", (tmp / "bad.csv").string(),
                          "--domain", "x"});
  EXPECT_EQ(r.code, 2);
}

TEST(CliTest, UsageErrorsAreExit2) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"--backend", "openai", "report", "--run", "x"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(CliTest, RemoteWithoutKeyIsConfigError) {
  Fixture f("cli-remote");
  const auto r = run_cli({"--backend", "remote", "--out", (f.tmp / "run").string(), "optimize", "--data",
                          f.data.string()});
  EXPECT_EQ(r.code, 2);
}

TEST(CliOptimizeTest, CompletesAndRerunIsIdentical) {
  Fixture f("cli-optimize");
  const auto run_a = f.tmp / "run-a";
  const auto run_b = f.tmp / "run-b";
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run_cli({"--config", f.config.string(), "--seed", "3", "--out", run_a.string(), "optimize", "--data",
                    f.data.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(60));
  r = run_cli({"--config", f.config.string(), "--seed", "3", "--out", run_b.string(), "optimize", "--data",
               f.data.string()});
  ASSERT_EQ(r.code, 0) << r.err;

  for (const char* name : {"archive.jsonl", "pulls.jsonl", "beam_history.jsonl", "final_prompt.txt", "config.ini"}) {
    ASSERT_TRUE(fs::exists(run_a / name)) << name;
    EXPECT_EQ(slurp(run_a / name), slurp(run_b / name)) << name;
  }
  const auto manifest = nlohmann::json::parse(slurp(run_a / "manifest.json"));
  EXPECT_EQ(manifest["status"], "completed");
  EXPECT_TRUE(fs::exists(run_a / "prompts" / "p0000.txt"));
}

TEST(CliOptimizeTest, AbortedRunResumesToSameResult) {
  Fixture f("cli-resume");
  const auto clean = f.tmp / "clean";
  const auto broken = f.tmp / "broken";
  const std::vector<std::string> base{"--config", f.config.string(), "--seed", "5"};
  auto with = [&](const fs::path& out, std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--out", out.string(), "optimize", "--data", f.data.string()});
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  ASSERT_EQ(with(clean, {}).code, 0);

  auto r = with(broken, {"--call-budget", "120"});
  ASSERT_EQ(r.code, 3) << r.out << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(broken / "manifest.json"))["status"], "resumable");
  int resumes = 0;
  do {
    r = with(broken, {"--call-budget", "120"});
    ++resumes;
  } while (r.code == 3 && resumes < 50);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resuming"), std::string::npos);

  for (const char* name : {"archive.jsonl", "pulls.jsonl", "beam_history.jsonl", "transcripts.jsonl",
                           "final_prompt.txt"}) {
    EXPECT_EQ(slurp(clean / name), slurp(broken / name)) << name;
  }
}

TEST(CliOptimizeTest, FreshIgnoresCheckpoint) {
  Fixture f("cli-fresh");
  const auto run = f.tmp / "run";
  ASSERT_EQ(run_cli({"--config", f.config.string(), "--out", run.string(), "optimize", "--data", f.data.string(),
                     "--call-budget", "60"})
                .code,
            3);
  const auto r = run_cli({"--config", f.config.string(), "--out", run.string(), "optimize", "--data",
                          f.data.string(), "--fresh"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("resuming"), std::string::npos);
}

TEST(CliEvaluateTest, PerfectPromptScoresOne) {
  Fixture f("cli-eval");
  write_file_atomic(f.tmp / "prompt.txt", "Rank them well.\n");
  const auto out = f.tmp / "eval";
  const auto r = run_cli({"--config", f.config.string(), "--out", out.string(), "evaluate", "--prompt",
                          (f.tmp / "prompt.txt").string(), "--data", f.data.string(), "--quality", "1.0", "--seeds",
                          "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_DOUBLE_EQ(report["mean"]["hr@1"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["mean"]["hallucination_ratio"].get<double>(), 0.0);
}

TEST(CliEvaluateTest, OneRowPerSeedPlusMean) {
  Fixture f("cli-eval-seeds");
  write_file_atomic(f.tmp / "prompt.txt", "Rank them.\n");
  const auto out = f.tmp / "eval";
  const auto r = run_cli({"--out", out.string(), "evaluate", "--prompt", (f.tmp / "prompt.txt").string(), "--data",
                          f.data.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(out / "report.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_TRUE(lines[0].starts_with("seed,n_sessions,"));
  EXPECT_TRUE(lines[1].starts_with("0,"));
  EXPECT_TRUE(lines[5].starts_with("2023,"));
  EXPECT_TRUE(lines[6].starts_with("mean,"));
}

TEST(CliEvaluateTest, JsonModeSameMetricsDifferentManifest) {
  Fixture f("cli-eval-json");
  write_file_atomic(f.tmp / "prompt.txt", "Rank them.\n");
  const auto plain = f.tmp / "plain";
  const auto json = f.tmp / "json";
  const std::vector<std::string> tail{"evaluate", "--prompt", (f.tmp / "prompt.txt").string(), "--data",
                                      f.data.string(), "--quality", "0.6", "--seeds", "0,42"};
  std::vector<std::string> a{"--out", plain.string()};
  a.insert(a.end(), tail.begin(), tail.end());
  std::vector<std::string> b{"--json-mode", "--out", json.string()};
  b.insert(b.end(), tail.begin(), tail.end());
  ASSERT_EQ(run_cli(a).code, 0);
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(slurp(plain / "report.csv"), slurp(json / "report.csv"));
  EXPECT_FALSE(nlohmann::json::parse(slurp(plain / "manifest.json"))["json_mode"].get<bool>());
  EXPECT_TRUE(nlohmann::json::parse(slurp(json / "manifest.json"))["json_mode"].get<bool>());
}

TEST(CliSelectTest, SingleRunIsIdentity) {
  Fixture f("cli-select-one");
  const auto run = f.tmp / "run";
  ASSERT_EQ(run_cli({"--config", f.config.string(), "--out", run.string(), "optimize", "--data", f.data.string()}).code,
            0);
  const auto out = f.tmp / "sel";
  const auto r = run_cli({"--config", f.config.string(), "--out", out.string(), "select", "--run", run.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out / "final_prompt.txt"), slurp(run / "final_prompt.txt"));
  std::istringstream csv(slurp(out / "cross_matrix.csv"));
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST(CliSelectTest, ThreeDomainsProduceFullMatrix) {
  Fixture a("cli-select-a", "games", 1);
  Fixture b("cli-select-b", "movies", 2);
  Fixture c("cli-select-c", "bundle", 3);
  std::vector<std::string> args{"--config", a.config.string(), "--out", (a.tmp / "sel").string(), "select"};
  for (Fixture* f : {&a, &b, &c}) {
    const auto run = f->tmp / "run";
    ASSERT_EQ(run_cli({"--config", f->config.string(), "--out", run.string(), "optimize", "--data",
                       f->data.string()})
                  .code,
              0);
    args.insert(args.end(), {"--run", run.string()});
  }
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto selection = nlohmann::json::parse(slurp(a.tmp / "sel" / "selection.json"));
  EXPECT_TRUE(selection.contains("domain"));
  std::istringstream csv(slurp(a.tmp / "sel" / "cross_matrix.csv"));
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 10);
}

TEST(CliSelectTest, IncompleteRunIsExit4) {
  Fixture f("cli-select-incomplete");
  const auto run = f.tmp / "run";
  ASSERT_EQ(run_cli({"--config", f.config.string(), "--out", run.string(), "optimize", "--data", f.data.string(),
                     "--call-budget", "50"})
                .code,
            3);
  const auto r = run_cli({"--out", (f.tmp / "sel").string(), "select", "--run", run.string()});
  EXPECT_EQ(r.code, 4);
}

TEST(CliReportTest, BeamTableAndTranscripts) {
  Fixture f("cli-report");
  const auto run = f.tmp / "run";
  ASSERT_EQ(run_cli({"--config", f.config.string(), "--out", run.string(), "optimize", "--data", f.data.string()}).code,
            0);
  auto r = run_cli({"report", "--run", run.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Beam evolution"), std::string::npos);
  EXPECT_NE(r.out.find("Lineage"), std::string::npos);
  EXPECT_NE(r.out.find("p0000"), std::string::npos);
  EXPECT_EQ(r.out.find("Transcripts"), std::string::npos);

  std::istringstream history(slurp(run / "beam_history.jsonl"));
  int snapshots = 0;
  for (std::string line; std::getline(history, line);) ++snapshots;
  EXPECT_EQ(snapshots, 3);  // initial beam plus one per iteration

  r = run_cli({"report", "--run", run.string(), "--transcripts"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Transcripts"), std::string::npos);
  EXPECT_NE(r.out.find("=== session"), std::string::npos);
}

TEST(CliReportTest, MissingArtifactsIsExit2) {
  TempDir tmp("cli-report-missing");
  EXPECT_EQ(run_cli({"report", "--run", (tmp / "absent").string()}).code, 2);
  fs::create_directories(tmp / "empty");
  EXPECT_EQ(run_cli({"report", "--run", (tmp / "empty").string()}).code, 2);
}

TEST(CliReportTest, EmptyArchiveSaysSo) {
  TempDir tmp("cli-report-empty");
  write_file_atomic(tmp / "archive.jsonl", "");
  write_file_atomic(tmp / "beam_history.jsonl", "");
  const auto r = run_cli({"report", "--run", tmp.path().string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("no prompts recorded"), std::string::npos);
}

}  // namespace
}  // namespace promptopt
