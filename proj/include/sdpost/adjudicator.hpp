#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdpost/backends.hpp"
#include "sdpost/core.hpp"
#include "sdpost/prompts.hpp"

namespace sdpost {

class UnparseableResponse : public Error {
public:
    using Error::Error;
};

class IncompleteMap : public Error {
public:
    using Error::Error;
};

// ─── Response parsing ───────────────────────────────────────────────────────

// The first balanced {...} span that parses as a JSON object. Prose around it
// is ignored.
inline std::optional<nlohmann::json> extract_first_json_object(std::string_view text) {
    for (std::size_t open = text.find('{'); open != std::string_view::npos;
         open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto doc = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
                if (!doc.is_discarded() && doc.is_object()) return doc;
                break;
            }
        }
    }
    return std::nullopt;
}

// ─── Transcript rendering ───────────────────────────────────────────────────

inline std::string format_time_span(const TimeInterval& iv) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%.2f-%.2f]", iv.start, iv.end);
    return buf;
}

inline std::string format_segment_line(const DiarSegment& s, std::string_view speaker) {
    return format_time_span(s.interval) + " " + std::string(speaker) + ": " + join_words(s.words);
}

inline std::string format_segment_line(const DiarSegment& s) {
    return format_segment_line(s, s.label.value);
}

inline std::string substitute(std::string text, std::string_view key, std::string_view value) {
    const std::string needle = "{{" + std::string(key) + "}}";
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size())) {
        text.replace(pos, needle.size(), value);
    }
    return text;
}

inline std::string join_labels(const std::vector<SpeakerLabel>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) out += ", ";
        out += l.value;
    }
    return out;
}

// Distinct non-Unknown labels in order of first appearance.
inline std::vector<SpeakerLabel> known_labels(const std::vector<DiarSegment>& segments) {
    std::vector<SpeakerLabel> out;
    for (const auto& s : segments) {
        if (s.label.is_unknown()) continue;
        if (std::find(out.begin(), out.end(), s.label) == out.end()) out.push_back(s.label);
    }
    return out;
}

// ─── Identity detection ─────────────────────────────────────────────────────

struct IdentityPromptOptions {
    bool safeguards = false;
    // Transcripts longer than this many words keep only their first and last
    // word_budget / 2 words (whole segments).
    std::size_t word_budget = 8000;
};

struct IdentityDetectionResult {
    IdentityMap map;
    std::string raw_response;
    std::vector<std::string> prompts;  // one per LLM call made
};

// Segment indices kept after head+tail truncation, in order; a gap between
// consecutive indices marks an elision.
inline std::vector<std::size_t> head_tail_selection(const std::vector<DiarSegment>& segs,
                                                    std::size_t word_budget) {
    std::size_t total = 0;
    for (const auto& s : segs) total += s.words.size();
    std::vector<std::size_t> all(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) all[i] = i;
    if (total <= word_budget) return all;

    const std::size_t half = word_budget / 2;
    std::size_t head_end = 0, used = 0;
    while (head_end < segs.size() && used + segs[head_end].words.size() <= half) {
        used += segs[head_end].words.size();
        ++head_end;
    }
    std::size_t tail_begin = segs.size();
    used = 0;
    while (tail_begin > head_end && used + segs[tail_begin - 1].words.size() <= half) {
        used += segs[tail_begin - 1].words.size();
        --tail_begin;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < head_end; ++i) out.push_back(i);
    for (std::size_t i = tail_begin; i < segs.size(); ++i) out.push_back(i);
    return out;
}

inline std::string build_identity_prompt(const std::vector<DiarSegment>& transcript,
                                         const IdentityPromptOptions& opts = {}) {
    std::string p(prompts::kIdentityInstruction);
    if (opts.safeguards) {
        p += "\n";
        p += substitute(std::string(prompts::kIdentitySafeguards), "labels",
                        join_labels(known_labels(transcript)));
    }
    p += "\n";
    p += prompts::kIdentityAnswerFormat;
    p += "\n\nConversation:\n";
    const auto keep = head_tail_selection(transcript, opts.word_budget);
    for (std::size_t k = 0; k < keep.size(); ++k) {
        if (k > 0 && keep[k] != keep[k - 1] + 1) p += "[...]\n";
        p += format_segment_line(transcript[keep[k]]);
        p += '\n';
    }
    return p;
}

namespace detail {

// Entries for the submitted labels; labels with no usable answer are
// reported through `missing`.
inline IdentityMap read_identity_answer(const nlohmann::json& obj, const std::vector<SpeakerLabel>& labels,
                                        std::vector<SpeakerLabel>& missing) {
    IdentityMap map;
    missing.clear();
    for (const auto& l : labels) {
        const auto it = obj.find(l.value);
        if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
            missing.push_back(l);
            continue;
        }
        map.set(l, Identity{it->get<std::string>()});
    }
    return map;
}

}  // namespace detail

// Asks the LLM for a label -> identity dictionary over the whole transcript.
// An unusable answer (no JSON object, or labels missing) gets one corrective
// re-prompt; if that also fails the call throws.
inline IdentityDetectionResult detect_identities(const std::vector<DiarSegment>& transcript, LanguageModel& llm,
                                                 const IdentityPromptOptions& opts = {}) {
    if (transcript.empty()) throw InvalidArgument("identity detection needs a non-empty transcript");
    const auto labels = known_labels(transcript);
    IdentityDetectionResult result;
    const std::string base = build_identity_prompt(transcript, opts);
    std::string prompt = base;
    for (int attempt = 0; attempt < 2; ++attempt) {
        result.prompts.push_back(prompt);
        result.raw_response = llm.complete(prompt).text;
        const auto obj = extract_first_json_object(result.raw_response);
        if (!obj) {
            if (attempt == 1) throw UnparseableResponse("identity answer contains no JSON object");
            prompt = base + "\nYour previous answer contained no JSON object. Reply with only the JSON object "
                            "mapping each of these labels to an identity: " + join_labels(labels) + ".\n";
            continue;
        }
        std::vector<SpeakerLabel> missing;
        auto map = detail::read_identity_answer(*obj, labels, missing);
        if (missing.empty()) {
            result.map = std::move(map);
            return result;
        }
        if (attempt == 1) throw IncompleteMap("identity answer is missing labels: " + join_labels(missing));
        prompt = base + "\nYour previous answer did not assign an identity to: " + join_labels(missing) +
                 ". Reply with only the JSON object mapping each of these labels to an identity: " +
                 join_labels(labels) + ".\n";
    }
    throw UnparseableResponse("identity detection failed");  // unreachable
}

// ─── Segment labeling ───────────────────────────────────────────────────────

struct LabelPromptOptions {
    std::size_t context_before = 6;
    std::size_t context_after = 6;
    std::size_t word_budget = 2000;  // context + target words
    std::string template_text = std::string(prompts::kSegmentLabelTemplateV1);
};

struct LlmLabelResult {
    std::size_t segment_id = 0;
    SpeakerLabel llm_label = SpeakerLabel::unknown();
    double confidence = 0.0;
    std::string raw_response;
};

// Context indices around `target`, nearest first on alternating sides, kept
// while the word total stays within budget. Returned in transcript order,
// target included.
inline std::vector<std::size_t> context_window(const std::vector<DiarSegment>& segs, std::size_t target,
                                               const LabelPromptOptions& opts) {
    std::vector<std::size_t> picked{target};
    std::size_t words = segs[target].words.size();
    std::size_t before = 0, after = 0;
    bool more = true;
    while (more) {
        more = false;
        if (before < opts.context_before && target >= before + 1) {
            const std::size_t i = target - before - 1;
            if (words + segs[i].words.size() > opts.word_budget) break;
            words += segs[i].words.size();
            picked.push_back(i);
            ++before;
            more = true;
        }
        if (after < opts.context_after && target + after + 1 < segs.size()) {
            const std::size_t i = target + after + 1;
            if (words + segs[i].words.size() > opts.word_budget) break;
            words += segs[i].words.size();
            picked.push_back(i);
            ++after;
            more = true;
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

inline std::string build_label_prompt(const std::vector<DiarSegment>& segs, std::size_t target,
                                      const LabelPromptOptions& opts = {}) {
    if (target >= segs.size()) throw InvalidArgument("target segment out of range");
    std::string conversation;
    for (auto i : context_window(segs, target, opts)) {
        if (!conversation.empty()) conversation += '\n';
        conversation += i == target ? format_segment_line(segs[i], prompts::kTargetMarker)
                                    : format_segment_line(segs[i]);
    }
    auto p = substitute(opts.template_text, "labels", join_labels(known_labels(segs)));
    return substitute(std::move(p), "conversation", conversation);
}

namespace detail {

inline std::optional<std::pair<std::string, double>> read_label_answer(const std::string& text) {
    const auto obj = extract_first_json_object(text);
    if (!obj) return std::nullopt;
    const auto l = obj->find("label");
    const auto c = obj->find("confidence");
    if (l == obj->end() || !l->is_string() || c == obj->end() || !c->is_number()) return std::nullopt;
    double conf = c->get<double>();
    if (!std::isfinite(conf)) conf = 0.0;
    return std::make_pair(l->get<std::string>(), std::clamp(conf, 0.0, 1.0));
}

}  // namespace detail

// Asks the LLM which known speaker said segment `target`. Never throws on a
// bad answer: after one re-prompt it reports ("Unknown", 0). Labels outside
// the recording's label set are coerced to ("Unknown", 0).
inline LlmLabelResult label_segment(const std::vector<DiarSegment>& segs, std::size_t target, LanguageModel& llm,
                                    const LabelPromptOptions& opts = {}) {
    const std::string base = build_label_prompt(segs, target, opts);
    const auto labels = known_labels(segs);
    LlmLabelResult r;
    r.segment_id = target;
    std::string prompt = base;
    for (int attempt = 0; attempt < 2; ++attempt) {
        r.raw_response = llm.complete(prompt).text;
        const auto answer = detail::read_label_answer(r.raw_response);
        if (!answer) {
            prompt = base + "\nYour previous answer could not be read. Reply with only the JSON object "
                            "{\"label\": ..., \"confidence\": ...}.\n";
            continue;
        }
        const SpeakerLabel label{answer->first};
        if (label.is_unknown() || std::find(labels.begin(), labels.end(), label) != labels.end()) {
            r.llm_label = label;
            r.confidence = answer->second;
        }
        return r;
    }
    return r;
}

inline bool is_confident(const LlmLabelResult& r, double threshold) {
    return r.confidence >= threshold;
}

}  // namespace sdpost
