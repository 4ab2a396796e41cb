#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "sdpost/backends.hpp"
#include "sdpost/core.hpp"
#include "sdpost/parallel.hpp"
#include "sdpost/text.hpp"

namespace sdpost {

enum class MismatchKind { OrphanWords, EmptySegment };

struct Mismatch {
    MismatchKind kind;
    DiarSegment segment;
    std::size_t segment_index = 0;  // position in ReconcileOutput::segments
};

struct ReconcileOutput {
    std::vector<DiarSegment> segments;  // sorted by start
    std::vector<Mismatch> mismatches;
    std::vector<DiarSegment> dropped;
};

// Splits orphan words into maximal runs whose inter-word gap (next start minus
// previous end) is at most gap_threshold; each run becomes one Unknown segment
// spanning [first.start, latest end].
inline std::vector<DiarSegment> group_orphans(const std::vector<Word>& words, double gap_threshold) {
    std::vector<DiarSegment> out;
    for (const auto& w : words) {
        if (!out.empty()) {
            auto& cur = out.back();
            if (w.interval.start - cur.words.back().interval.end <= gap_threshold) {
                cur.interval.end = std::max(cur.interval.end, w.interval.end);
                cur.words.push_back(w);
                continue;
            }
        }
        DiarSegment seg;
        seg.interval = w.interval;
        seg.label = SpeakerLabel::unknown();
        seg.origin = SegmentOrigin::OrphanWords;
        seg.words.push_back(w);
        out.push_back(std::move(seg));
    }
    return out;
}

namespace detail {

// Index of the containing segment with the latest start (then the earliest
// end), or nullopt.
inline std::optional<std::size_t> containing_segment(const std::vector<DiarSegment>& sd,
                                                     const Word& w) {
    const auto upper = std::upper_bound(sd.begin(), sd.end(), w.interval.start,
                                        [](double t, const DiarSegment& s) { return t < s.interval.start; });
    std::optional<std::size_t> best;
    for (auto it = upper; it != sd.begin();) {
        --it;
        if (best && it->interval.start < sd[*best].interval.start) break;
        if (word_in_segment(w, *it)) {
            if (!best || it->interval.end <= sd[*best].interval.end) {
                best = static_cast<std::size_t>(it - sd.begin());
            }
        }
    }
    return best;
}

}  // namespace detail

// Assigns every word to the diarization segment containing its start time.
// Words no segment claims are grouped into Unknown segments; segments left
// without words are reported as EmptySegment mismatches.
inline ReconcileOutput align(std::vector<DiarSegment> sd, const std::vector<Word>& words,
                             double orphan_gap = 1.0) {
    std::stable_sort(sd.begin(), sd.end(), by_start);
    for (auto& s : sd) s.words.clear();

    std::vector<DiarSegment> orphans;
    std::vector<Word> run;
    auto flush = [&] {
        for (auto& g : group_orphans(run, orphan_gap)) orphans.push_back(std::move(g));
        run.clear();
    };
    for (const auto& w : words) {
        if (auto idx = detail::containing_segment(sd, w)) {
            flush();
            sd[*idx].words.push_back(w);
        } else {
            run.push_back(w);
        }
    }
    flush();

    ReconcileOutput out;
    out.segments = std::move(sd);
    for (auto& o : orphans) out.segments.push_back(std::move(o));
    std::stable_sort(out.segments.begin(), out.segments.end(), by_start);
    for (std::size_t i = 0; i < out.segments.size(); ++i) {
        const auto& s = out.segments[i];
        if (s.origin == SegmentOrigin::OrphanWords) {
            out.mismatches.push_back({MismatchKind::OrphanWords, s, i});
        } else if (s.words.empty()) {
            out.mismatches.push_back({MismatchKind::EmptySegment, s, i});
        }
    }
    return out;
}

struct Resolution {
    bool keep = false;
    DiarSegment segment;
};

// Retention rule after re-running ASR over a mismatched segment. Orphan
// segments survive only when the re-run transcript is close to the original
// (kept with their original words); empty segments survive only if the re-run
// recognized something (kept with the re-run words).
inline Resolution rerun_policy(const Mismatch& m, const std::vector<Word>& rerun_words,
                               double similarity_threshold = 0.9) {
    Resolution r;
    r.segment = m.segment;
    if (m.kind == MismatchKind::OrphanWords) {
        const auto original = normalize_transcript(join_words(m.segment.words));
        const auto rerun = normalize_transcript(join_words(rerun_words));
        r.keep = levenshtein_similarity(original, rerun) >= similarity_threshold;
        return r;
    }
    r.keep = !rerun_words.empty();
    if (r.keep) {
        r.segment.words = rerun_words;
        for (auto& w : r.segment.words) w.source = WordSource::RerunPass;
        sort_words(r.segment.words);
    }
    return r;
}

// Applies per-mismatch resolutions (same order as out.mismatches).
inline ReconcileOutput apply_resolutions(const ReconcileOutput& in, const std::vector<Resolution>& res) {
    std::vector<std::optional<Resolution>> by_segment(in.segments.size());
    for (std::size_t i = 0; i < in.mismatches.size(); ++i) {
        by_segment[in.mismatches[i].segment_index] = res.at(i);
    }
    ReconcileOutput out;
    out.mismatches = in.mismatches;
    out.dropped = in.dropped;
    for (std::size_t i = 0; i < in.segments.size(); ++i) {
        if (!by_segment[i]) {
            out.segments.push_back(in.segments[i]);
        } else if (by_segment[i]->keep) {
            out.segments.push_back(by_segment[i]->segment);
        } else {
            out.dropped.push_back(in.segments[i]);
        }
    }
    return out;
}

// Re-runs ASR over every mismatched segment (cropped to the segment, no
// padding) with bounded parallelism and applies the retention rules.
inline ReconcileOutput rerun_mismatches(const ReconcileOutput& aligned, const SpeechRecognizer& asr,
                                        const AudioRef& audio, double similarity_threshold,
                                        std::size_t max_parallel) {
    std::vector<Resolution> res(aligned.mismatches.size());
    parallel_for(aligned.mismatches.size(), max_parallel, [&](std::size_t i) {
        const auto& m = aligned.mismatches[i];
        auto words = asr.transcribe(audio, m.segment.interval);
        res[i] = rerun_policy(m, words, similarity_threshold);
    });
    return apply_resolutions(aligned, res);
}

}  // namespace sdpost
