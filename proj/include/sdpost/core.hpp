#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdpost {

// ─── Errors ─────────────────────────────────────────────────────────────────

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// ─── Time ───────────────────────────────────────────────────────────────────

// Seconds from the start of the recording. Times come straight from model
// output and are compared exactly.
struct TimeInterval {
    double start = 0.0;
    double end = 0.0;

    constexpr double duration() const { return end - start; }
    constexpr bool valid() const { return start >= 0.0 && end >= start; }
    constexpr bool contains(double t) const { return start <= t && t <= end; }

    static TimeInterval checked(double start, double end) {
        TimeInterval iv{start, end};
        if (!iv.valid()) {
            throw InvalidArgument("invalid interval [" + std::to_string(start) + ", " +
                                  std::to_string(end) + "]");
        }
        return iv;
    }

    friend constexpr bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

inline double interval_overlap(const TimeInterval& a, const TimeInterval& b) {
    return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

inline TimeInterval interval_hull(const TimeInterval& a, const TimeInterval& b) {
    return {std::min(a.start, b.start), std::max(a.end, b.end)};
}

// ─── Labels ─────────────────────────────────────────────────────────────────

inline constexpr const char* kUnknown = "Unknown";

// Raw speaker label as produced by a diarizer ("spk0", ...) or the reserved
// "Unknown" for speech no diarizer segment claimed.
struct SpeakerLabel {
    std::string value;

    SpeakerLabel() = default;
    explicit SpeakerLabel(std::string v) : value(std::move(v)) {}

    static SpeakerLabel unknown() { return SpeakerLabel{kUnknown}; }
    bool is_unknown() const { return value == kUnknown; }

    friend auto operator<=>(const SpeakerLabel&, const SpeakerLabel&) = default;
    friend bool operator==(const SpeakerLabel&, const SpeakerLabel&) = default;
};

// Human-meaningful identity ("Patient", "Physical Therapist", ...).
struct Identity {
    std::string value;

    Identity() = default;
    explicit Identity(std::string v) : value(std::move(v)) {}

    static Identity unknown() { return Identity{kUnknown}; }
    bool is_unknown() const { return value == kUnknown; }

    friend auto operator<=>(const Identity&, const Identity&) = default;
    friend bool operator==(const Identity&, const Identity&) = default;
};

// ─── Words and segments ─────────────────────────────────────────────────────

enum class WordSource { InitialPass, RerunPass };

struct Word {
    std::string text;
    TimeInterval interval;
    WordSource source = WordSource::InitialPass;

    friend bool operator==(const Word&, const Word&) = default;
};

enum class SegmentOrigin { Diarizer, OrphanWords, Chunked };

struct DiarSegment {
    TimeInterval interval;
    SpeakerLabel label;
    std::vector<Word> words;
    SegmentOrigin origin = SegmentOrigin::Diarizer;

    friend bool operator==(const DiarSegment&, const DiarSegment&) = default;
};

// Closed on both ends: a word starting exactly on a boundary belongs to the
// segment.
inline bool word_in_segment(const Word& w, const DiarSegment& s) {
    return s.interval.contains(w.interval.start);
}

inline bool by_start(const DiarSegment& a, const DiarSegment& b) {
    if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
    return a.interval.end < b.interval.end;
}

inline void sort_words(std::vector<Word>& words) {
    std::stable_sort(words.begin(), words.end(), [](const Word& a, const Word& b) {
        return a.interval.start < b.interval.start;
    });
}

inline std::string join_words(const std::vector<Word>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w.text;
    }
    return out;
}

// ─── Identity map ───────────────────────────────────────────────────────────

class IdentityMap {
public:
    IdentityMap() { entries_.emplace(SpeakerLabel::unknown(), Identity::unknown()); }

    void set(const SpeakerLabel& label, Identity identity) {
        if (label.is_unknown()) return;  // pinned to Unknown
        if (identity.value.empty()) throw InvalidArgument("empty identity for " + label.value);
        entries_[label] = std::move(identity);
    }

    bool contains(const SpeakerLabel& label) const { return entries_.count(label) != 0; }

    const Identity* find(const SpeakerLabel& label) const {
        auto it = entries_.find(label);
        return it == entries_.end() ? nullptr : &it->second;
    }

    const std::map<SpeakerLabel, Identity>& entries() const { return entries_; }

    // Labels that were assigned identical identities collapse to one identity.
    std::vector<Identity> distinct_identities() const {
        std::vector<Identity> out;
        for (const auto& [label, id] : entries_) {
            if (label.is_unknown()) continue;
            if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
        }
        return out;
    }

    friend bool operator==(const IdentityMap&, const IdentityMap&) = default;

private:
    std::map<SpeakerLabel, Identity> entries_;
};

// ─── Embeddings ─────────────────────────────────────────────────────────────

struct Embedding {
    std::vector<float> vector;

    std::size_t dim() const { return vector.size(); }

    double norm() const {
        double s = 0.0;
        for (float v : vector) s += static_cast<double>(v) * v;
        return std::sqrt(s);
    }

    Embedding normalized() const {
        const double n = norm();
        if (!(n > 0.0)) throw InvalidArgument("embedding has zero norm");
        Embedding out;
        out.vector.reserve(vector.size());
        for (float v : vector) out.vector.push_back(static_cast<float>(v / n));
        return out;
    }
};

}  // namespace sdpost
