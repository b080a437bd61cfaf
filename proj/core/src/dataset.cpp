#include "promptopt/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/hashing.hpp"

namespace promptopt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// One CSV record with its starting line. Quoted fields may span lines.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> scan_csv(std::string_view content) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = content.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    bool row_done = false;
    while (i < n && !row_done) {
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          in_quotes = false;
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        ++i;
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty()) throw ParseError(line, "stray quote inside unquoted field");
          in_quotes = true;
          field_quoted = true;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          field_quoted = false;
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          row_done = true;
          break;
        default:
          if (field_quoted) throw ParseError(line, "text after closing quote");
          field.push_back(c);
      }
      ++i;
    }
    if (in_quotes) throw ParseError(rec.line, "unterminated quoted field");
    rec.fields.push_back(std::move(field));
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t parse_timestamp(std::size_t line, const std::string& raw) {
  const std::string t = trim(raw);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    if (v < 0) throw ParseError(line, "negative timestamp");
    return static_cast<std::int64_t>(v);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError(line, "timestamp is not a number: '" + t + "'");
  }
}

InteractionEvent checked_event(std::size_t line, std::string user, std::string title, std::int64_t ts) {
  if (trim(user).empty()) throw ParseError(line, "empty user_id");
  if (trim(title).empty()) throw ParseError(line, "empty item_title");
  return InteractionEvent{std::move(user), std::move(title), ts};
}

std::vector<InteractionEvent> parse_csv_events(std::string_view content) {
  auto records = scan_csv(content);
  if (records.empty()) return {};
  const auto& header = records.front();
  int col_user = -1, col_title = -1, col_ts = -1;
  for (std::size_t c = 0; c < header.fields.size(); ++c) {
    const std::string name = trim(header.fields[c]);
    if (name == "user_id") col_user = static_cast<int>(c);
    if (name == "item_title") col_title = static_cast<int>(c);
    if (name == "timestamp") col_ts = static_cast<int>(c);
  }
  if (col_user < 0 || col_title < 0 || col_ts < 0) {
    throw ParseError(header.line, "header must name user_id, item_title and timestamp");
  }
  std::vector<InteractionEvent> events;
  events.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      throw ParseError(rec.line, fmt::format("expected {} fields, found {}", header.fields.size(), rec.fields.size()));
    }
    events.push_back(checked_event(rec.line, trim(rec.fields[col_user]), rec.fields[col_title],
                                   parse_timestamp(rec.line, rec.fields[col_ts])));
  }
  return events;
}

std::string json_scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return fmt::format("{}", v.get<double>());
  return {};
}

std::vector<InteractionEvent> parse_jsonl_events(std::string_view content) {
  std::vector<InteractionEvent> events;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ++line;
    const std::string text = trim(content.substr(pos, end - pos));
    pos = end + 1;
    if (text.empty()) {
      if (end == content.size()) break;
      continue;
    }
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("user_id") || !obj.contains("item_title") || !obj.contains("timestamp")) {
      throw ParseError(line, "record must have user_id, item_title and timestamp");
    }
    const auto& ts = obj["timestamp"];
    std::int64_t stamp = 0;
    if (ts.is_number()) {
      const double v = ts.get<double>();
      if (v < 0) throw ParseError(line, "negative timestamp");
      stamp = static_cast<std::int64_t>(v);
    } else if (ts.is_string()) {
      stamp = parse_timestamp(line, ts.get<std::string>());
    } else {
      throw ParseError(line, "timestamp must be a number");
    }
    if (!obj["item_title"].is_string()) throw ParseError(line, "item_title must be a string");
    events.push_back(checked_event(line, json_scalar_to_string(obj["user_id"]), obj["item_title"].get<std::string>(), stamp));
    if (end == content.size()) break;
  }
  return events;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::vector<Item> titles_to_items(const json& arr) {
  std::vector<Item> items;
  for (const auto& t : arr) items.push_back(Item{static_cast<int>(items.size() + 1), t.get<std::string>()});
  return items;
}

json titles_of(std::span<const Item> items) {
  json arr = json::array();
  for (const auto& it : items) arr.push_back(it.title);
  return arr;
}

template <typename Fn>
void for_each_jsonl(std::string_view content, Fn&& fn) {
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ++line;
    const auto text = content.substr(pos, end - pos);
    pos = end + 1;
    if (trim(text).empty()) continue;
    try {
      fn(json::parse(text));
    } catch (const json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
}

}  // namespace

EventFormat parse_event_format(std::string_view name) {
  if (name == "csv") return EventFormat::csv;
  if (name == "jsonl") return EventFormat::jsonl;
  throw std::invalid_argument("unknown event format: " + std::string(name));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

std::vector<InteractionEvent> parse_events(std::string_view content, EventFormat format) {
  return format == EventFormat::csv ? parse_csv_events(content) : parse_jsonl_events(content);
}

std::vector<InteractionEvent> load_events(const fs::path& path, EventFormat format) {
  if (!fs::exists(path)) throw IoError("input file does not exist: " + path.string());
  return parse_events(read_file(path), format);
}

std::vector<Session> sessionize(std::span<const InteractionEvent> events, std::string_view domain, int min_length) {
  // Bucket indices per user, keeping first-seen user order for tie stability.
  std::unordered_map<std::string, std::vector<std::size_t>> by_user;
  std::vector<std::string> user_order;
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto [it, inserted] = by_user.try_emplace(events[i].user_id);
    if (inserted) user_order.push_back(events[i].user_id);
    it->second.push_back(i);
  }

  struct Keyed {
    std::int64_t first_ts;
    std::string user;
    std::int64_t day;
    Session session;
  };
  std::vector<Keyed> out;

  for (const auto& user : user_order) {
    auto idx = by_user[user];
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return events[a].timestamp < events[b].timestamp; });
    std::size_t start = 0;
    while (start < idx.size()) {
      const std::int64_t day = floor_div(events[idx[start]].timestamp, kSecondsPerDay);
      std::size_t stop = start;
      while (stop < idx.size() && floor_div(events[idx[stop]].timestamp, kSecondsPerDay) == day) ++stop;
      const auto group = std::span(idx).subspan(start, stop - start);
      start = stop;
      if (static_cast<int>(group.size()) < std::max(min_length, 2)) continue;

      Session s;
      s.session_id = fmt::format("{}-d{}", user, day);
      s.domain = std::string(domain);
      s.day_bucket = day;
      s.target = Item{1, events[group.back()].item_title};
      for (std::size_t g = 0; g + 1 < group.size(); ++g) {
        const auto& title = events[group[g]].item_title;
        if (title == s.target.title) continue;
        s.interactions.push_back(Item{0, title});
      }
      if (s.interactions.empty()) continue;
      reindex(s.interactions);
      out.push_back(Keyed{events[group.front()].timestamp, user, day, std::move(s)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.first_ts, a.user, a.day) < std::tie(b.first_ts, b.user, b.day);
  });
  std::vector<Session> sessions;
  sessions.reserve(out.size());
  for (auto& k : out) sessions.push_back(std::move(k.session));
  return sessions;
}

DatasetSplit split_8_1_1(std::span<const Session> sessions) {
  const std::size_t n = sessions.size();
  if (n < 10) throw TooFewSessions(fmt::format("8:1:1 split needs at least 10 sessions, got {}", n));
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  DatasetSplit split;
  split.train.assign(sessions.begin(), sessions.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(sessions.begin() + static_cast<std::ptrdiff_t>(n_train),
                          sessions.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(sessions.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), sessions.end());
  return split;
}

std::vector<Item> item_catalog(std::span<const InteractionEvent> events) {
  std::vector<std::string> titles;
  titles.reserve(events.size());
  for (const auto& e : events) titles.push_back(e.item_title);
  std::sort(titles.begin(), titles.end());
  titles.erase(std::unique(titles.begin(), titles.end()), titles.end());
  std::vector<Item> items;
  items.reserve(titles.size());
  for (auto& t : titles) items.push_back(Item{static_cast<int>(items.size() + 1), std::move(t)});
  return items;
}

CandidateSet build_candidate_set(const Session& session, std::span<const Item> item_pool, int size, SeededRng& rng) {
  if (size < 1) throw std::invalid_argument("candidate size must be >= 1");
  std::unordered_set<std::string_view> excluded;
  excluded.insert(session.target.title);
  for (const auto& it : session.interactions) excluded.insert(it.title);

  std::vector<std::string_view> eligible;
  eligible.reserve(item_pool.size());
  std::unordered_set<std::string_view> seen;
  for (const auto& it : item_pool) {
    if (excluded.contains(it.title) || !seen.insert(it.title).second) continue;
    eligible.push_back(it.title);
  }
  const auto needed = static_cast<std::size_t>(size - 1);
  if (eligible.size() < needed) {
    throw PoolTooSmall(fmt::format("session {}: {} eligible negatives, {} needed", session.session_id,
                                   eligible.size(), needed));
  }

  CandidateSet cs;
  cs.seed = rng.seed();
  for (std::size_t i : rng.sample_indices(eligible.size(), needed)) cs.items.push_back(Item{0, std::string(eligible[i])});
  cs.target_position = static_cast<int>(rng.uniform_int(1, size));
  cs.items.insert(cs.items.begin() + (cs.target_position - 1), Item{0, session.target.title});
  reindex(cs.items);
  return cs;
}

CandidateSet build_candidate_set_for_seed(const Session& session, std::span<const Item> item_pool, int size,
                                          std::uint64_t seed) {
  auto rng = derive_rng(seed, "candidates/" + session.session_id);
  return build_candidate_set(session, item_pool, size, rng);
}

std::vector<Session> subsample_sessions(std::span<const Session> sessions, std::size_t n, SeededRng& rng) {
  if (n >= sessions.size()) return {sessions.begin(), sessions.end()};
  auto picked = rng.sample_indices(sessions.size(), n);
  std::sort(picked.begin(), picked.end());
  std::vector<Session> out;
  out.reserve(n);
  for (std::size_t i : picked) out.push_back(sessions[i]);
  return out;
}

void StatsAccumulator::add(const Session& session) {
  ++sessions_;
  total_length_ += session.interactions.size() + 1;
  for (const auto& it : session.interactions) items_.insert(it.title);
  items_.insert(session.target.title);
}

void StatsAccumulator::add_titles(std::span<const std::string_view> titles) {
  ++sessions_;
  total_length_ += titles.size();
  for (auto t : titles) {
    if (!items_.contains(std::string(t))) items_.emplace(t);
  }
}

DatasetStats StatsAccumulator::finish() const {
  if (sessions_ == 0) throw EmptyInput("compute_stats: no sessions");
  DatasetStats s;
  s.n_items = items_.size();
  s.n_sessions = sessions_;
  s.avg_session_length = static_cast<double>(total_length_) / static_cast<double>(sessions_);
  s.density_indicator = static_cast<double>(s.n_sessions) * s.avg_session_length / static_cast<double>(s.n_items);
  return s;
}

DatasetStats compute_stats(std::span<const Session> sessions) {
  StatsAccumulator acc;
  for (const auto& s : sessions) acc.add(s);
  return acc.finish();
}

std::string stats_to_json(const DatasetStats& stats) {
  json j = {{"n_items", stats.n_items},
            {"n_sessions", stats.n_sessions},
            {"avg_session_length", stats.avg_session_length},
            {"density_indicator", stats.density_indicator}};
  return j.dump(2) + "\n";
}

void write_sessions_jsonl(std::ostream& out, std::span<const Session> sessions) {
  for (const auto& s : sessions) {
    json j = {{"session_id", s.session_id},
              {"domain", s.domain},
              {"interactions", titles_of(s.interactions)},
              {"target", s.target.title},
              {"day_bucket", s.day_bucket}};
    out << j.dump() << '\n';
  }
}

std::vector<Session> read_sessions_jsonl(std::string_view content) {
  std::vector<Session> sessions;
  for_each_jsonl(content, [&](const json& j) {
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    s.domain = j.value("domain", std::string{});
    s.interactions = titles_to_items(j.at("interactions"));
    s.target = Item{1, j.at("target").get<std::string>()};
    s.day_bucket = j.value("day_bucket", std::int64_t{0});
    sessions.push_back(std::move(s));
  });
  return sessions;
}

void write_candidates_jsonl(std::ostream& out, std::span<const Session> sessions,
                            std::span<const CandidateSet> candidates) {
  if (sessions.size() != candidates.size()) throw std::invalid_argument("sessions/candidates length mismatch");
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    json j = {{"session_id", sessions[i].session_id},
              {"seed", candidates[i].seed},
              {"items", titles_of(candidates[i].items)},
              {"target_position", candidates[i].target_position}};
    out << j.dump() << '\n';
  }
}

std::map<std::string, CandidateSet> read_candidates_jsonl(std::string_view content) {
  std::map<std::string, CandidateSet> out;
  for_each_jsonl(content, [&](const json& j) {
    CandidateSet cs;
    cs.seed = j.at("seed").get<std::uint64_t>();
    cs.items = titles_to_items(j.at("items"));
    cs.target_position = j.at("target_position").get<int>();
    out.emplace(j.at("session_id").get<std::string>(), std::move(cs));
  });
  return out;
}

const std::vector<Session>& PreparedDataset::sessions(std::string_view split_name) const {
  if (split_name == "train") return split.train;
  if (split_name == "validation") return split.validation;
  if (split_name == "test") return split.test;
  throw std::invalid_argument("unknown split: " + std::string(split_name));
}

CandidateSet PreparedDataset::candidates_for(const Session& session, std::int64_t seed) const {
  if (auto by_seed = candidates.find(seed); by_seed != candidates.end()) {
    if (auto it = by_seed->second.find(session.session_id); it != by_seed->second.end()) return it->second;
  }
  return build_candidate_set_for_seed(session, catalog, candidate_size, static_cast<std::uint64_t>(seed));
}

namespace {

std::string sessions_text(std::span<const Session> sessions) {
  std::ostringstream os;
  write_sessions_jsonl(os, sessions);
  return os.str();
}

std::uint64_t split_fingerprint(const std::string& train, const std::string& val, const std::string& test) {
  return fnv1a64(test, fnv1a64(val, fnv1a64(train)));
}

}  // namespace

PreparedDataset prepare_dataset(std::span<const InteractionEvent> events, std::string_view domain,
                                int candidate_size, std::span<const std::int64_t> seeds, int min_length) {
  PreparedDataset data;
  data.domain = std::string(domain);
  data.candidate_size = candidate_size;
  const auto sessions = sessionize(events, domain, min_length);
  data.split = split_8_1_1(sessions);
  data.fingerprint = split_fingerprint(sessions_text(data.split.train), sessions_text(data.split.validation),
                                       sessions_text(data.split.test));
  data.catalog = item_catalog(events);
  for (auto seed : seeds) {
    auto& sets = data.candidates[seed];
    for (const auto& s : sessions) {
      sets.emplace(s.session_id,
                   build_candidate_set_for_seed(s, data.catalog, candidate_size, static_cast<std::uint64_t>(seed)));
    }
  }
  return data;
}

void save_prepared_dataset(const PreparedDataset& data, const DatasetStats& stats, const fs::path& dir) {
  fs::create_directories(dir);
  const auto train = sessions_text(data.split.train);
  const auto val = sessions_text(data.split.validation);
  const auto test = sessions_text(data.split.test);
  write_file_atomic(dir / "sessions_train.jsonl", train);
  write_file_atomic(dir / "sessions_validation.jsonl", val);
  write_file_atomic(dir / "sessions_test.jsonl", test);

  std::ostringstream catalog;
  for (const auto& it : data.catalog) catalog << json(it.title).dump() << '\n';
  write_file_atomic(dir / "catalog.jsonl", catalog.str());

  std::vector<const Session*> all;
  for (const auto* part : {&data.split.train, &data.split.validation, &data.split.test}) {
    for (const auto& s : *part) all.push_back(&s);
  }
  json seeds = json::array();
  for (const auto& [seed, sets] : data.candidates) {
    std::ostringstream os;
    for (const Session* s : all) {
      const auto& cs = sets.at(s->session_id);
      json j = {{"session_id", s->session_id},
                {"seed", cs.seed},
                {"items", titles_of(cs.items)},
                {"target_position", cs.target_position}};
      os << j.dump() << '\n';
    }
    write_file_atomic(dir / fmt::format("candidates_seed{}.jsonl", seed), os.str());
    seeds.push_back(seed);
  }
  write_file_atomic(dir / "stats.json", stats_to_json(stats));
  json meta = {{"domain", data.domain},
               {"candidate_size", data.candidate_size},
               {"seeds", seeds},
               {"fingerprint", to_hex(split_fingerprint(train, val, test))}};
  write_file_atomic(dir / "dataset.json", meta.dump(2) + "\n");
}

PreparedDataset load_prepared_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory does not exist: " + dir.string());
  PreparedDataset data;
  const json meta = json::parse(read_file(dir / "dataset.json"));
  data.domain = meta.at("domain").get<std::string>();
  data.candidate_size = meta.at("candidate_size").get<int>();
  const auto train = read_file(dir / "sessions_train.jsonl");
  const auto val = read_file(dir / "sessions_validation.jsonl");
  const auto test = read_file(dir / "sessions_test.jsonl");
  data.split.train = read_sessions_jsonl(train);
  data.split.validation = read_sessions_jsonl(val);
  data.split.test = read_sessions_jsonl(test);
  data.fingerprint = split_fingerprint(train, val, test);
  for_each_jsonl(read_file(dir / "catalog.jsonl"), [&](const json& j) {
    data.catalog.push_back(Item{static_cast<int>(data.catalog.size() + 1), j.get<std::string>()});
  });
  for (const auto& seed : meta.at("seeds")) {
    const auto s = seed.get<std::int64_t>();
    const auto path = dir / fmt::format("candidates_seed{}.jsonl", s);
    if (fs::exists(path)) data.candidates[s] = read_candidates_jsonl(read_file(path));
  }
  return data;
}

}  // namespace promptopt
