#include "promptopt/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptopt/errors.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

constexpr std::string_view kStart = "<START>";
constexpr std::string_view kEnd = "<END>";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<int> to_int(std::string_view digits) {
  if (digits.empty() || digits.size() > 9) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || p != digits.data() + digits.size()) return std::nullopt;
  return v;
}

std::string normalize_title(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool space = false;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  // Surrounding quotes and trailing sentence punctuation are not part of a title.
  auto strip = [&](auto pred) {
    while (!out.empty() && pred(out.back())) out.pop_back();
    std::size_t b = 0;
    while (b < out.size() && (out[b] == '"' || out[b] == '\'')) ++b;
    out.erase(0, b);
  };
  strip([](char c) { return c == '"' || c == '\'' || c == ',' || c == ';' || c == ' '; });
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// Candidate titles normalized once per parse.
class TitleIndex {
 public:
  explicit TitleIndex(std::span<const Item> candidates) {
    normalized_.reserve(candidates.size());
    for (const auto& c : candidates) normalized_.push_back(normalize_title(c.title));
    for (std::size_t i = 0; i < normalized_.size(); ++i) exact_.emplace(normalized_[i], i);
  }

  std::size_t size() const { return normalized_.size(); }

  std::optional<std::size_t> find(std::string_view reference) const {
    const auto ref = normalize_title(reference);
    if (ref.empty()) return std::nullopt;
    if (auto it = exact_.find(ref); it != exact_.end()) return it->second;
    std::optional<std::size_t> best;
    double best_distance = kFuzzyTitleThreshold;
    for (std::size_t i = 0; i < normalized_.size(); ++i) {
      const auto& cand = normalized_[i];
      const std::size_t longest = std::max(cand.size(), ref.size());
      const std::size_t gap = cand.size() > ref.size() ? cand.size() - ref.size() : ref.size() - cand.size();
      if (longest == 0 || static_cast<double>(gap) / static_cast<double>(longest) > kFuzzyTitleThreshold) continue;
      const double d = static_cast<double>(levenshtein(cand, ref)) / static_cast<double>(longest);
      if (d <= best_distance && (!best || d < best_distance)) {
        best = i;
        best_distance = d;
      }
    }
    return best;
  }

 private:
  std::vector<std::string> normalized_;
  std::unordered_map<std::string_view, std::size_t> exact_;  // first index wins
};

struct Reference {
  std::optional<int> index;
  std::string title;
};

// Strips "12." / "12)" / "-" / "*" list markers.
std::string_view strip_enumerator(std::string_view line) {
  std::string_view s = trim_view(line);
  std::size_t i = 0;
  if (!s.empty() && (s[0] == '-' || s[0] == '*' || s.substr(0, 3) == "\xe2\x80\xa2")) {
    i = s[0] == '-' || s[0] == '*' ? 1 : 3;
  } else {
    if (!s.empty() && s[0] == '#') ++i;
    const std::size_t d0 = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == d0 || i >= s.size() || (s[i] != '.' && s[i] != ')' && s[i] != ':')) return s;
    ++i;
  }
  if (i < s.size() && !is_space(s[i])) return s;
  auto rest = trim_view(s.substr(i));
  return rest.empty() ? s : rest;
}

// A run of integers separated by list punctuation, e.g. "[19, 3, 7]".
std::optional<std::vector<int>> int_sequence(std::string_view s) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < s.size() && is_digit(s[j])) ++j;
      auto v = to_int(s.substr(i, j - i));
      if (!v) return std::nullopt;
      out.push_back(*v);
      i = j;
      continue;
    }
    if (is_space(c) || c == ',' || c == ';' || c == '>' || c == '-' || c == '.' || c == '|' || c == '[' ||
        c == ']') {
      ++i;
      continue;
    }
    return std::nullopt;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// "Ranking: ..." -> "...", when the label carries no digits or quotes.
std::string_view strip_label(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 60) return s;
  for (char c : s.substr(0, colon)) {
    if (is_digit(c) || c == '"') return s;
  }
  return trim_view(s.substr(colon + 1));
}

std::vector<Reference> line_references(std::string_view line, const TitleIndex& titles) {
  std::vector<Reference> refs;
  for (auto& q : scan_quoted_refs(line)) refs.push_back(Reference{q.index, std::move(q.title)});
  if (!refs.empty()) return refs;

  const auto body = strip_enumerator(line);
  if (body.empty()) return refs;
  for (auto candidate_text : {body, strip_label(body)}) {
    if (auto ints = int_sequence(candidate_text)) {
      for (int v : *ints) refs.push_back(Reference{v, {}});
      return refs;
    }
  }

  // Unquoted title, possibly followed by an annotation.
  std::vector<std::string_view> attempts{body, strip_label(body)};
  for (std::string_view sep : {" - ", " \xe2\x80\x93 ", " (", ": "}) {
    if (auto p = body.find(sep); p != std::string_view::npos && p > 0) attempts.push_back(body.substr(0, p));
  }
  for (auto a : attempts) {
    if (titles.find(a)) {
      refs.push_back(Reference{std::nullopt, std::string(a)});
      return refs;
    }
  }
  return refs;
}

std::optional<std::size_t> resolve(const Reference& ref, const TitleIndex& titles) {
  // A stated title that matches nothing is not rescued by its index: echoed
  // session items carry indices that collide with candidate positions.
  if (!ref.title.empty()) return titles.find(ref.title);
  if (ref.index && *ref.index >= 1 && *ref.index <= static_cast<int>(titles.size())) {
    return static_cast<std::size_t>(*ref.index - 1);
  }
  return std::nullopt;
}

std::vector<Reference> free_text_references(std::string_view text, const TitleIndex& titles) {
  std::vector<Reference> best;
  std::vector<Reference> current;
  auto close_block = [&] {
    if (!current.empty() && current.size() >= best.size()) best = std::move(current);
    current.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!trim_view(line).empty()) {
      auto refs = line_references(line, titles);
      // References that resolve to nothing do not keep a block alive.
      const bool useful = std::any_of(refs.begin(), refs.end(), [&](const Reference& r) {
        return resolve(r, titles).has_value();
      });
      if (useful) {
        std::move(refs.begin(), refs.end(), std::back_inserter(current));
      } else {
        close_block();
      }
    }
    if (end == text.size()) break;
  }
  close_block();
  return best;
}

std::optional<std::string> json_string_field(const json& obj, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const auto& v = obj[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return std::nullopt;
}

// First balanced [...] that parses as an array of item objects.
std::optional<std::vector<Reference>> json_references(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    int depth = 0;
    bool in_string = false;
    std::size_t close = std::string_view::npos;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']' && --depth == 0) {
        close = i;
        break;
      }
    }
    if (close == std::string_view::npos) return std::nullopt;
    const json arr = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (arr.is_discarded() || !arr.is_array() || arr.empty()) continue;
    std::vector<Reference> refs;
    bool item_like = false;
    for (const auto& el : arr) {
      if (!el.is_object()) continue;
      auto id = json_string_field(el, "Item ID");
      auto title = json_string_field(el, "Item Title");
      if (!id && !title) continue;
      item_like = true;
      Reference r;
      if (id) r.index = to_int(trim_view(*id));
      if (title) r.title = *title;
      refs.push_back(std::move(r));
    }
    if (item_like) return refs;
  }
  return std::nullopt;
}

std::string escape_title(std::string_view title) {
  std::string out;
  out.reserve(title.size() + 2);
  for (char c : title) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ok:
      return "ok";
    case Verdict::no_list_found:
      return "no_list_found";
    case Verdict::target_absent:
      return "target_absent";
    case Verdict::partial_list:
      return "partial_list";
  }
  return "no_list_found";
}

Verdict parse_verdict(std::string_view text) {
  for (auto v : {Verdict::ok, Verdict::no_list_found, Verdict::target_absent, Verdict::partial_list}) {
    if (to_string(v) == text) return v;
  }
  throw std::invalid_argument("unknown verdict: " + std::string(text));
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  const auto na = normalize_title(a);
  const auto nb = normalize_title(b);
  const std::size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
}

std::optional<std::size_t> match_title(std::string_view reference, std::span<const Item> candidates) {
  return TitleIndex(candidates).find(reference);
}

std::vector<QuotedRef> scan_quoted_refs(std::string_view text) {
  std::vector<QuotedRef> refs;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t q = text.find('"', i);
    if (q == std::string_view::npos) break;
    // Walk back over `\s*\.\s*\d+`.
    std::size_t k = q;
    while (k > 0 && is_space(text[k - 1])) --k;
    std::optional<int> index;
    if (k > 0 && text[k - 1] == '.') {
      --k;
      while (k > 0 && is_space(text[k - 1])) --k;
      std::size_t digits_end = k;
      while (k > 0 && is_digit(text[k - 1])) --k;
      if (k < digits_end) index = to_int(text.substr(k, digits_end - k));
    }
    if (!index) {
      i = q + 1;
      continue;
    }
    std::string title;
    std::size_t j = q + 1;
    bool closed = false;
    for (; j < text.size(); ++j) {
      const char c = text[j];
      if (c == '\\' && j + 1 < text.size()) {
        title.push_back(text[++j]);
      } else if (c == '"') {
        closed = true;
        break;
      } else if (c == '\n') {
        break;
      } else {
        title.push_back(c);
      }
    }
    if (!closed) {
      i = q + 1;
      continue;
    }
    refs.push_back(QuotedRef{*index, std::move(title)});
    i = j + 1;
  }
  return refs;
}

RankedResponse parse_ranking(std::string_view text, const CandidateSet& candidates, bool json_mode) {
  RankedResponse out;
  out.raw = std::string(text);
  const std::span<const Item> items(candidates.items);
  const TitleIndex titles(items);

  std::vector<Reference> refs;
  std::optional<std::vector<Reference>> from_json;
  if (json_mode || text.find("\"Item ID\"") != std::string_view::npos) from_json = json_references(text);
  refs = from_json ? std::move(*from_json) : free_text_references(text, titles);

  std::vector<bool> used(items.size(), false);
  for (const auto& r : refs) {
    auto pos = resolve(r, titles);
    if (!pos || used[*pos]) continue;
    used[*pos] = true;
    out.ordering.push_back(items[*pos]);
  }

  if (out.ordering.empty()) {
    out.verdict = Verdict::no_list_found;
    return out;
  }
  if (candidates.items.empty()) {
    out.verdict = Verdict::target_absent;
    return out;
  }
  out.target_rank = rank_of_target(out.ordering, candidates.target());
  if (!out.target_rank) {
    out.verdict = Verdict::target_absent;
  } else if (out.ordering.size() == items.size()) {
    out.verdict = Verdict::ok;
  } else {
    out.verdict = Verdict::partial_list;
  }
  return out;
}

std::optional<ExtractedBlock> extract_block(std::string_view text) {
  const auto s = text.find(kStart);
  if (s == std::string_view::npos) return std::nullopt;
  const auto body_begin = s + kStart.size();
  const auto e = text.find(kEnd, body_begin);
  ExtractedBlock block;
  if (e == std::string_view::npos) {
    block.body = std::string(trim_view(text.substr(body_begin)));
    block.remainder = std::string(text.substr(0, s));
  } else {
    block.body = std::string(trim_view(text.substr(body_begin, e - body_begin)));
    block.remainder = std::string(text.substr(0, s)) + std::string(text.substr(e + kEnd.size()));
  }
  return block;
}

std::vector<std::string> extract_all_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while (true) {
    const auto s = text.find(kStart, pos);
    if (s == std::string_view::npos) break;
    const auto body_begin = s + kStart.size();
    const auto e = text.find(kEnd, body_begin);
    if (e == std::string_view::npos) break;
    auto body = trim_view(text.substr(body_begin, e - body_begin));
    if (!body.empty()) blocks.emplace_back(body);
    pos = e + kEnd.size();
  }
  return blocks;
}

std::vector<std::string> parse_reasons(std::string_view text) {
  auto blocks = extract_all_blocks(text);
  if (!blocks.empty()) return blocks;

  // Fallback: enumerated paragraphs ("1. ...", "- ..."), continuation lines
  // joined until a blank line or the next marker.
  std::vector<std::string> reasons;
  std::string current;
  bool open = false;
  auto flush = [&] {
    auto t = trim_view(current);
    if (open && !t.empty()) reasons.emplace_back(t);
    current.clear();
    open = false;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto trimmed = trim_view(line);
    if (trimmed.empty()) {
      flush();
    } else {
      const auto body = strip_enumerator(trimmed);
      if (body.size() != trimmed.size()) {
        flush();
        open = true;
        current = std::string(body);
      } else if (open) {
        current += " ";
        current += trimmed;
      }
    }
    if (end == text.size()) break;
  }
  flush();
  return reasons;
}

std::string parse_prompt_body(std::string_view text) {
  std::string body;
  if (auto block = extract_block(text)) {
    body = std::move(block->body);
  } else {
    body = std::string(trim_view(text));
  }
  if (body.empty()) throw EmptyPrompt("completion contained no prompt text");
  return body;
}

std::string render_item_list(std::span<const Item> items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("{}.\"{}\"", items[i].index, escape_title(items[i].title));
  }
  out += "]";
  return out;
}

std::string render_user_input(const Session& session, const CandidateSet& candidates) {
  return "Current session interactions: " + render_item_list(session.interactions) +
         "\nCandidate item set: " + render_item_list(candidates.items);
}

std::string render_ranking_answer(std::span<const Item> ordering, bool json_format) {
  if (json_format) {
    json arr = json::array();
    for (const auto& it : ordering) arr.push_back({{"Item ID", std::to_string(it.index)}, {"Item Title", it.title}});
    return arr.dump();
  }
  std::string out = "Ranking results:\n";
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    out += fmt::format("{}. {}.\"{}\"\n", i + 1, ordering[i].index, escape_title(ordering[i].title));
  }
  return out;
}

}  // namespace promptopt
