#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "promptopt/rng.hpp"
#include "promptopt/types.hpp"

namespace promptopt {

struct InteractionEvent {
  std::string user_id;
  std::string item_title;
  std::int64_t timestamp = 0;  // seconds since epoch

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

enum class EventFormat { csv, jsonl };

EventFormat parse_event_format(std::string_view name);

// Rows are returned in file order. Malformed rows raise ParseError with the
// 1-based line number; an unreadable file raises IoError.
std::vector<InteractionEvent> load_events(const std::filesystem::path& path, EventFormat format);
std::vector<InteractionEvent> parse_events(std::string_view content, EventFormat format);

constexpr std::int64_t kSecondsPerDay = 86400;

/// Groups each user's events by UTC calendar day. Within a day the last event
/// is the target and the earlier ones are the interactions. Days with fewer
/// than `min_length` events are dropped, as are events that repeat the
/// target's title (the target may not appear in its own history). Output is
/// ordered by each session's first timestamp.
std::vector<Session> sessionize(std::span<const InteractionEvent> events, std::string_view domain,
                                int min_length = 2);

struct DatasetSplit {
  std::vector<Session> train;
  std::vector<Session> validation;
  std::vector<Session> test;
};

// Chronological 8:1:1 split: first floor(0.8n), next floor(0.1n), remainder.
DatasetSplit split_8_1_1(std::span<const Session> sessions);

// Distinct titles, sorted, indexed 1..n.
std::vector<Item> item_catalog(std::span<const InteractionEvent> events);

CandidateSet build_candidate_set(const Session& session, std::span<const Item> item_pool, int size,
                                 SeededRng& rng);

// Per-session stream derived from (seed, session_id), so sets can be built in
// any order or in parallel and still agree.
CandidateSet build_candidate_set_for_seed(const Session& session, std::span<const Item> item_pool, int size,
                                          std::uint64_t seed);

std::vector<Session> subsample_sessions(std::span<const Session> sessions, std::size_t n, SeededRng& rng);

struct DatasetStats {
  std::size_t n_items = 0;
  std::size_t n_sessions = 0;
  double avg_session_length = 0.0;
  double density_indicator = 0.0;
};

// Streaming form of compute_stats, for corpora too large to materialize.
class StatsAccumulator {
 public:
  void add(const Session& session);
  void add_titles(std::span<const std::string_view> titles);
  DatasetStats finish() const;

 private:
  std::unordered_set<std::string> items_;
  std::size_t sessions_ = 0;
  std::size_t total_length_ = 0;
};

DatasetStats compute_stats(std::span<const Session> sessions);

std::string stats_to_json(const DatasetStats& stats);

// JSONL records: {session_id, domain, interactions:[titles], target, day_bucket}
void write_sessions_jsonl(std::ostream& out, std::span<const Session> sessions);
std::vector<Session> read_sessions_jsonl(std::string_view content);
// JSONL records: {session_id, seed, items:[titles], target_position}
void write_candidates_jsonl(std::ostream& out, std::span<const Session> sessions,
                            std::span<const CandidateSet> candidates);
std::map<std::string, CandidateSet> read_candidates_jsonl(std::string_view content);

/// On-disk layout produced by `promptopt prepare`:
///   sessions_{train,validation,test}.jsonl, catalog.jsonl,
///   candidates_seed<S>.jsonl (one per seed), stats.json, dataset.json
struct PreparedDataset {
  std::string domain;
  int candidate_size = 20;
  DatasetSplit split;
  std::vector<Item> catalog;
  std::map<std::int64_t, std::map<std::string, CandidateSet>> candidates;
  std::uint64_t fingerprint = 0;

  const std::vector<Session>& sessions(std::string_view split_name) const;
  // Prepared set when available, otherwise built from the catalog.
  CandidateSet candidates_for(const Session& session, std::int64_t seed) const;
};

PreparedDataset prepare_dataset(std::span<const InteractionEvent> events, std::string_view domain,
                                int candidate_size, std::span<const std::int64_t> seeds, int min_length = 2);
void save_prepared_dataset(const PreparedDataset& data, const DatasetStats& stats,
                           const std::filesystem::path& dir);
PreparedDataset load_prepared_dataset(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace promptopt
