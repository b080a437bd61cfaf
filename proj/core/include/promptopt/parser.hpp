#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptopt/metrics.hpp"
#include "promptopt/types.hpp"

namespace promptopt {

enum class Verdict {
  ok,             // full permutation of the candidates, target included
  no_list_found,  // nothing list-like could be mapped to a candidate
  target_absent,  // a list was found but the target is not in it
  partial_list,   // shorter than the candidate set, target included
};

std::string_view to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view text);

struct RankedResponse {
  std::vector<Item> ordering;
  Verdict verdict = Verdict::no_list_found;
  std::string raw;
  Rank target_rank;  // empty for hallucinated verdicts

  bool hallucinated() const noexcept {
    return verdict == Verdict::no_list_found || verdict == Verdict::target_absent;
  }
};

/// Maps an untrusted completion onto the candidate set. Never throws.
///
/// Free text is read line by line. A line can contribute `idx."title"`
/// references, a run of bare indices ("Ranking: 19, 3, 7"), or a title that
/// matches a candidate exactly or within normalized edit distance 0.15.
/// Consecutive contributing lines form a block; prose lines end a block. The
/// largest block wins, the later one on ties, so an echoed candidate list
/// followed by the actual ranking resolves to the ranking.
///
/// JSON mode looks for an array of {"Item ID", "Item Title"} objects and falls
/// back to free text when none parses.
RankedResponse parse_ranking(std::string_view text, const CandidateSet& candidates, bool json_mode);

std::vector<std::string> parse_reasons(std::string_view text);

// Body of the first <START>...<END> block, trimmed; the whole text when no
// markers are present. Throws EmptyPrompt if nothing remains.
std::string parse_prompt_body(std::string_view text);

struct ExtractedBlock {
  std::string body;
  std::string remainder;
};

std::optional<ExtractedBlock> extract_block(std::string_view text);
std::vector<std::string> extract_all_blocks(std::string_view text);

// `[1."t1", 2."t2"]`, with `\` and `"` inside titles backslash-escaped.
std::string render_item_list(std::span<const Item> items);

// Two lines: session interactions, then the candidate set.
std::string render_user_input(const Session& session, const CandidateSet& candidates);

struct QuotedRef {
  int index = 0;
  std::string title;
};

// Every `idx."title"` occurrence, unescaped, in order.
std::vector<QuotedRef> scan_quoted_refs(std::string_view text);

// A well-formed answer listing `ordering` (items keep their candidate index).
std::string render_ranking_answer(std::span<const Item> ordering, bool json);

double normalized_edit_distance(std::string_view a, std::string_view b);

inline constexpr double kFuzzyTitleThreshold = 0.15;

// Zero-based candidate position: exact normalized title first, then the
// closest title within the fuzzy threshold (lowest index on ties).
std::optional<std::size_t> match_title(std::string_view reference, std::span<const Item> candidates);

}  // namespace promptopt
