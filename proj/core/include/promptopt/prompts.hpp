#pragma once

#include <span>
#include <string>
#include <string_view>

namespace promptopt::prompts {

// Initial task description: four planned subtasks around session intents.
extern const std::string_view kIntentTaskDescription;
// Simplified two-subtask variant phrased around preferences.
extern const std::string_view kPreferenceTaskDescription;
// Appended to the user turn of ranking requests in JSON mode.
extern const std::string_view kJsonModeConstraint;
// System turn for the reflection, refinement and augmentation calls.
extern const std::string_view kAssistantSystem;

// Anchors the mock backend (and tests) use to recognize request families.
extern const std::string_view kReasonsMarker;
extern const std::string_view kRefineMarker;
extern const std::string_view kAugmentMarker;
extern const std::string_view kCurrentPromptPrefix;
extern const std::string_view kErrorCaseLead;
extern const std::string_view kAugmentInputPrefix;
extern const std::string_view kAugmentInputSuffix;

std::string reasons_request(std::string_view prompt, std::string_view error_case, int n_reasons);
std::string refine_request(std::string_view prompt, std::string_view error_case, std::span<const std::string> reasons);
std::string augment_request(std::string_view refined_prompt);

}  // namespace promptopt::prompts
