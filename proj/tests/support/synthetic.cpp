#include "synthetic.hpp"

#include <atomic>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "promptopt/rng.hpp"

namespace promptopt::synth {

namespace fs = std::filesystem;

std::vector<std::string> make_titles(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) out.push_back(fmt::format("Title {:04d}", i));
  return out;
}

std::vector<Session> make_sessions(int n, int length, int n_titles, std::uint64_t seed, const std::string& domain) {
  const auto titles = make_titles(n_titles);
  SeededRng rng(seed, "synthetic-sessions");
  std::vector<Session> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto picks = rng.sample_indices(titles.size(), static_cast<std::size_t>(length) + 1);
    Session session;
    session.session_id = fmt::format("{}-s{:05d}", domain, s);
    session.domain = domain;
    session.day_bucket = s;
    for (int i = 0; i < length; ++i) {
      session.interactions.push_back(Item{i + 1, titles[picks[static_cast<std::size_t>(i)]]});
    }
    session.target = Item{1, titles[picks.back()]};
    out.push_back(std::move(session));
  }
  return out;
}

std::vector<EvalCase> make_cases(int n, int candidate_size, std::uint64_t seed, const std::string& domain) {
  const int n_titles = std::max(200, candidate_size + 20);
  const auto titles = make_titles(n_titles);
  std::vector<Item> catalog;
  for (std::size_t i = 0; i < titles.size(); ++i) catalog.push_back(Item{static_cast<int>(i) + 1, titles[i]});
  std::vector<EvalCase> out;
  for (auto& s : make_sessions(n, 5, n_titles, seed, domain)) {
    CandidateSet cs = build_candidate_set_for_seed(s, catalog, candidate_size, seed);
    out.push_back(EvalCase{std::move(s), std::move(cs)});
  }
  return out;
}

std::vector<InteractionEvent> make_events(int users, int days, int n_titles, std::uint64_t seed) {
  const auto titles = make_titles(n_titles);
  SeededRng rng(seed, "synthetic-events");
  std::vector<InteractionEvent> out;
  for (int u = 0; u < users; ++u) {
    for (int d = 0; d < days; ++d) {
      const int len = static_cast<int>(rng.uniform_int(2, 8));
      for (int k = 0; k < len; ++k) {
        out.push_back(InteractionEvent{fmt::format("user{:03d}", u), titles[rng.uniform_below(titles.size())],
                                       d * kSecondsPerDay + 3600 + k * 60 + u});
      }
    }
  }
  return out;
}

std::string events_csv(std::span<const InteractionEvent> events) {
  std::string out = "user_id,item_title,timestamp\n";
  for (const auto& e : events) {
    std::string quoted = "\"";
    for (char c : e.item_title) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out += fmt::format("{},{},{}\n", e.user_id, quoted, e.timestamp);
  }
  return out;
}

MockConfig quiet_mock() {
  MockConfig cfg;
  cfg.hallucination_rate = 0.0;
  cfg.refine_gain_sd = 0.0;
  cfg.augment_noise = 0.0;
  return cfg;
}

std::unique_ptr<MockOracle> make_mock(const MockConfig& cfg, std::uint64_t seed, std::span<const EvalCase> cases) {
  auto mock = std::make_unique<MockOracle>(cfg, seed);
  std::vector<Session> sessions;
  sessions.reserve(cases.size());
  for (const auto& c : cases) sessions.push_back(c.session);
  mock->register_sessions(sessions);
  return mock;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          fmt::format("promptopt-{}-{}-{}", tag, static_cast<long>(::getpid()), counter.fetch_add(1));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace promptopt::synth
