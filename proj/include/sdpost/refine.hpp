#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdpost/adjudicator.hpp"
#include "sdpost/core.hpp"
#include "sdpost/text.hpp"

namespace sdpost {

class MissingIdentity : public Error {
public:
    using Error::Error;
};

struct AdjudicationRecord {
    std::size_t segment_id = 0;
    SpeakerLabel original;
    SpeakerLabel reverified;
    std::optional<LlmLabelResult> llm;  // present iff the segment was sent to the LLM
};

enum class Provenance { OriginalAgreed, LlmAssigned, MajorityVote, UnknownRetained };

inline std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::OriginalAgreed: return "OriginalAgreed";
        case Provenance::LlmAssigned: return "LlmAssigned";
        case Provenance::MajorityVote: return "MajorityVote";
        case Provenance::UnknownRetained: return "UnknownRetained";
    }
    return "?";
}

inline Provenance provenance_from_string(std::string_view s) {
    for (auto p : {Provenance::OriginalAgreed, Provenance::LlmAssigned, Provenance::MajorityVote,
                   Provenance::UnknownRetained}) {
        if (to_string(p) == s) return p;
    }
    throw InvalidArgument("unknown provenance '" + std::string(s) + "'");
}

struct FinalSegment {
    TimeInterval interval;
    Identity identity;
    std::vector<Word> words;
    Provenance provenance = Provenance::OriginalAgreed;
    std::vector<std::size_t> source_ids;  // reconciled segment ids merged into this one
};

// Identity occurring at least twice; with three distinct identities the first
// (the original label's identity) wins.
inline Identity majority_vote(const Identity& a, const Identity& b, const Identity& c) {
    if (b == c) return b;
    return a;
}

namespace detail {

inline const Identity& lookup(const IdentityMap& map, const SpeakerLabel& label) {
    const Identity* id = map.find(label);
    if (!id) throw MissingIdentity("no identity for speaker label '" + label.value + "'");
    return *id;
}

}  // namespace detail

struct RefineDecision {
    Identity identity;
    Provenance provenance;
};

// Identity-mapped label fusion for one segment. An Unknown segment the LLM
// could not place confidently stays Unknown.
inline RefineDecision decide_identity(const AdjudicationRecord& rec, const IdentityMap& map, double threshold) {
    const bool confident = rec.llm && is_confident(*rec.llm, threshold);
    if (rec.original.is_unknown()) {
        if (!confident || rec.llm->llm_label.is_unknown()) {
            return {Identity::unknown(), Provenance::UnknownRetained};
        }
        return {detail::lookup(map, rec.llm->llm_label), Provenance::LlmAssigned};
    }
    if (rec.original == rec.reverified || !confident) {
        return {detail::lookup(map, rec.original), Provenance::OriginalAgreed};
    }
    return {majority_vote(detail::lookup(map, rec.original), detail::lookup(map, rec.llm->llm_label),
                          detail::lookup(map, rec.reverified)),
            Provenance::MajorityVote};
}

inline FinalSegment refine_segment(const AdjudicationRecord& rec, const DiarSegment& segment,
                                   const IdentityMap& map, double threshold) {
    const auto d = decide_identity(rec, map, threshold);
    FinalSegment out;
    out.interval = segment.interval;
    out.identity = d.identity;
    out.words = segment.words;
    sort_words(out.words);
    out.provenance = d.provenance;
    out.source_ids = {rec.segment_id};
    return out;
}

// Concatenates consecutive same-identity segments whose gap is at most
// max_gap. Unknown segments never merge.
inline std::vector<FinalSegment> merge_adjacent(const std::vector<FinalSegment>& segments, double max_gap) {
    std::vector<FinalSegment> out;
    for (const auto& s : segments) {
        if (!out.empty()) {
            auto& last = out.back();
            if (!s.identity.is_unknown() && last.identity == s.identity &&
                s.interval.start - last.interval.end <= max_gap) {
                last.interval = interval_hull(last.interval, s.interval);
                last.words.insert(last.words.end(), s.words.begin(), s.words.end());
                sort_words(last.words);
                last.source_ids.insert(last.source_ids.end(), s.source_ids.begin(), s.source_ids.end());
                continue;
            }
        }
        out.push_back(s);
    }
    return out;
}

// Drops a segment that overlaps another segment of the same identity whose
// transcript contains its own (normalized words, contiguous). When two
// segments contain each other the shorter goes; exact twins drop the earlier.
inline std::vector<FinalSegment> clean_duplicates(const std::vector<FinalSegment>& segments,
                                                  std::vector<std::size_t>* removed = nullptr) {
    const std::size_t n = segments.size();
    std::vector<std::vector<std::string>> text(n);
    for (std::size_t i = 0; i < n; ++i) text[i] = normalized_tokens(join_words(segments[i].words));

    auto dominated_by = [&](std::size_t s, std::size_t t) {
        if (segments[s].identity != segments[t].identity) return false;
        if (!(interval_overlap(segments[s].interval, segments[t].interval) > 0.0)) return false;
        if (!contains_contiguous(text[t], text[s])) return false;
        if (!contains_contiguous(text[s], text[t])) return true;
        const double ds = segments[s].interval.duration();
        const double dt = segments[t].interval.duration();
        if (ds != dt) return ds < dt;
        return s < t;
    };

    std::vector<FinalSegment> out;
    for (std::size_t s = 0; s < n; ++s) {
        bool drop = false;
        for (std::size_t t = 0; t < n && !drop; ++t) drop = t != s && dominated_by(s, t);
        if (drop) {
            if (removed) removed->push_back(s);
        } else {
            out.push_back(segments[s]);
        }
    }
    return out;
}

}  // namespace sdpost
