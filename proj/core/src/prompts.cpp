#include "promptopt/prompts.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace promptopt::prompts {

const std::string_view kIntentTaskDescription =
    "Based on the user's current session interactions, you need to answer the following subtasks step by step:\n"
    "1. Discover combinations of items within the session, where the size of combinations can be one or more.\n"
    "2. Based on the items within each combination, infer the user's interactive intent for each combination.\n"
    "3. Select the intent from the inferred ones that best represent the user's current preferences.\n"
    "4. Based on the selected intent, please rerank the items in the candidate set according to the possibility of "
    "potential user interactions and show me your ranking results with the item index.\n"
    "Note that the order of all items in the candidate set must be provided, and the items for ranking must be "
    "within the candidate set.";

const std::string_view kPreferenceTaskDescription =
    "Based on the user's current session interactions, you need to answer the following tasks:\n"
    "1. Please infer the user's preferences, considering that the user may have one or multiple preferences.\n"
    "2. Based on inferred preferences, please rerank the items in the candidate set according to the possibility "
    "of potential user interactions and show me your ranking results with the item index.\n"
    "Note that the order of all items in the candidate set must be provided, and the items for ranking must be "
    "within the candidate set.";

const std::string_view kJsonModeConstraint =
    "Provide the ranking results for the candidate set using JSON format, following this format without "
    "deviation: [{\"Item ID\": \"correspond item index\", \"Item Title\": \"correspond Item Title\"}]";

const std::string_view kAssistantSystem = "You are a helpful assistant that writes and improves prompts.";

const std::string_view kReasonsMarker = "reasons why the prompt could have gotten this example wrong";
const std::string_view kRefineMarker = "please write one improved prompt";
const std::string_view kAugmentMarker = "Generate a variation of the following prompt while keeping the semantic meaning.";
const std::string_view kCurrentPromptPrefix = "My current prompt is ";
const std::string_view kErrorCaseLead = ".\nBut this prompt gets the following example wrong: ";
const std::string_view kAugmentInputPrefix = "\nInput: ";
const std::string_view kAugmentInputSuffix = ".\nOutput:";

namespace {
constexpr std::string_view kPreamble = "I'm trying to write a zero-shot recommender prompt.\n";
}

std::string reasons_request(std::string_view prompt, std::string_view error_case, int n_reasons) {
  return fmt::format("{}{}{}{}{}, give {} {}.\nWrap each reason with <START> and <END>.", kPreamble,
                     kCurrentPromptPrefix, prompt, kErrorCaseLead, error_case, n_reasons, kReasonsMarker);
}

std::string refine_request(std::string_view prompt, std::string_view error_case, std::span<const std::string> reasons) {
  return fmt::format(
      "{}{}{}{}{}.\nBased on the example the problem with this prompt is that {}.\n"
      "Based on the above information, {}.\nThe prompt is wrapped with <START> and <END>.\nThe new prompt is:",
      kPreamble, kCurrentPromptPrefix, prompt, kErrorCaseLead, error_case, fmt::join(reasons, "\n"), kRefineMarker);
}

std::string augment_request(std::string_view refined_prompt) {
  return fmt::format("{}{}{}{}", kAugmentMarker, kAugmentInputPrefix, refined_prompt, kAugmentInputSuffix);
}

}  // namespace promptopt::prompts
