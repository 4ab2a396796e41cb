#pragma once

#include <string_view>

namespace sdpost::prompts {

inline constexpr std::string_view kIdentityInstruction =
    "You are given a conversation with speaker labels. Your task is to assign an identity to each "
    "speaker. If different original speaker labels refer to the same person, merge them by "
    "assigning the same identity, but only do this if you are very sure.";

// Extra constraints for smaller models that drift from the output contract.
inline constexpr std::string_view kIdentitySafeguards =
    "Use specific identities (for example a role such as \"Nurse\" or a name) rather than general "
    "labels like \"main\" or \"background\". Every one of these speaker labels must appear in your "
    "answer: {{labels}}.";

inline constexpr std::string_view kIdentityAnswerFormat =
    "Answer with a single JSON object that maps each speaker label to its identity, for example "
    "{\"spk0\": \"Doctor\", \"spk1\": \"Patient\"}.";

// Must stay identical to resources/prompts/segment_label.v1.txt.
inline constexpr std::string_view kSegmentLabelTemplateV1 =
    "You are given an excerpt of a conversation. Each line shows the start and end time in seconds, "
    "a speaker label, and what was said. One line is marked TARGET instead of a speaker label.\n"
    "Decide which speaker said the TARGET line. Use the meaning of the surrounding dialogue "
    "(questions and their answers, who is being addressed, continuity of topic) and the timing of "
    "the turns.\n"
    "Known speaker labels: {{labels}}\n"
    "If none of the known speakers fits, use \"Unknown\".\n"
    "Answer with a single JSON object of the form {\"label\": \"<speaker label>\", \"confidence\": "
    "<number between 0 and 1>}, where confidence is how certain you are.\n"
    "\n"
    "Conversation:\n"
    "{{conversation}}\n";

inline constexpr std::string_view kTargetMarker = "TARGET";

}  // namespace sdpost::prompts
