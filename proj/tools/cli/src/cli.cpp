#include "promptopt/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "promptopt/errors.hpp"

namespace promptopt::cli {

namespace {

void add_global_options(CLI::App& app, GlobalOptions& g) {
  app.add_option("--config", g.config_path, "INI config file ([optimizer], [mock], [remote])");
  app.add_option("--backend", g.backend, "LLM backend")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--concurrency", g.concurrency, "Concurrent ranking calls per batch")->check(CLI::PositiveNumber);
  app.add_flag("--json-mode", g.json_mode, "Ask for JSON-formatted rankings");
}

}  // namespace

int run(const std::vector<std::string>& args, const Io& io) {
  CLI::App app{"Prompt optimization for intent-aware session recommendation", "promptopt"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  add_global_options(app, g);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "Sessionize interactions, split 8:1:1, sample candidate sets");
  prepare->add_option("--input", prep.input, "Interaction file")->required();
  prepare->add_option("--format", prep.format, "Input format")->check(CLI::IsMember({"csv", "jsonl"}));
  prepare->add_option("--domain", prep.domain, "Domain name")->required();
  prepare->add_option("--min-length", prep.min_length, "Minimum session length (with target)");
  prepare->add_flag("--single-seed", prep.single_seed, "Only build candidate sets for --seed");

  OptimizeOptions opt;
  auto* optimize = app.add_subcommand("optimize", "Run the iterative prompt optimization");
  optimize->add_option("--data", opt.data, "Prepared dataset directory")->required();
  optimize->add_option("--initial-prompt", opt.initial_prompt, "Initial prompt file (default: built-in)");
  optimize->add_option("--call-budget", opt.call_budget, "Abort (resumably) after this many backend calls");
  optimize->add_flag("--fresh", opt.fresh, "Ignore any checkpoint in the run directory");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a prompt on a split, once per seed");
  evaluate->add_option("--prompt", ev.prompt, "Prompt file")->required();
  evaluate->add_option("--data", ev.data, "Prepared dataset directory")->required();
  evaluate->add_option("--split", ev.split, "Split")->check(CLI::IsMember({"train", "validation", "test"}));
  evaluate->add_option("--seeds", ev.seeds, "Candidate-set seeds (default: config)")->delimiter(',');
  evaluate->add_option("--quality", ev.quality, "Mock only: latent quality of the prompt")
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--from-run", ev.from_runs, "Mock only: reuse prompt qualities from a run directory");

  SelectOptions sel;
  auto* select = app.add_subcommand("select", "Pick the final prompt by cross-domain validation");
  select->add_option("--run", sel.runs, "Completed run directory, one per domain")->required();
  select->add_option("--validation", sel.validation, "Prepared dataset per run (default: the run's dataset)");

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("--run", rep.run, "Run directory")->required();
  report->add_flag("--transcripts", rep.transcripts, "Dump raw responses per session");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*prepare) return cmd_prepare(g, prep, io);
    if (*optimize) return cmd_optimize(g, opt, io);
    if (*evaluate) return cmd_evaluate(g, ev, io);
    if (*select) return cmd_select(g, sel, io);
    if (*report) return cmd_report(g, rep, io);
  } catch (const BackendError& e) {
    io.err << "error: " << e.what() << "\n";
    return kResumable;
  } catch (const IoError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    io.err << fmt::format("error: line {}: {}\n", e.line(), e.reason());
    return kUsage;
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    // Remaining dataset errors: too few sessions, empty input, pool too small, empty prompt.
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace promptopt::cli
