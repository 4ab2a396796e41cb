#pragma once

// Generators for the mock scripts used by the test suites and `mock-gen`.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdpost/mock_backends.hpp"

namespace sdpost::mock {

namespace detail {

inline const std::vector<std::string>& vocabulary(const std::string& identity) {
    static const std::vector<std::string> clinician{
        "how", "is", "the", "pain", "today", "can", "you", "lift", "your", "arm", "for", "me",
        "let's", "try", "ten", "more", "steps", "did", "take", "medication", "this", "morning",
        "any", "dizziness", "when", "standing", "up", "good", "slowly", "now"};
    static const std::vector<std::string> patient{
        "it's", "a", "little", "better", "yes", "I", "took", "them", "after", "breakfast", "my",
        "knee", "still", "hurts", "at", "night", "sometimes", "I", "feel", "tired", "okay", "the",
        "stairs", "are", "hard", "no", "not", "really", "well", "maybe"};
    static const std::vector<std::string> other{
        "mom", "has", "been", "sleeping", "more", "she", "forgets", "the", "pills", "I", "drive",
        "her", "on", "weekends", "we", "bought", "a", "new", "chair", "should", "call", "you",
        "about", "the", "appointment", "thanks", "for", "coming", "out", "today"};
    if (identity.find("Therapist") != std::string::npos || identity.find("Clinician") != std::string::npos)
        return clinician;
    if (identity == "Patient") return patient;
    return other;
}

struct Cast {
    std::string speaker;
    std::string identity;
    std::string voice;
};

// Appends one turn [start, end] with evenly spaced words.
inline void add_turn(Script& s, std::mt19937_64& rng, const Cast& who, double start, double end) {
    ScriptTurn t;
    t.speaker = who.speaker;
    t.identity = who.identity;
    t.voice = who.voice;
    t.start = start;
    t.end = end;
    const auto& vocab = vocabulary(who.identity);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>((end - start) / 0.4));
    const double step = (end - start) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        ScriptWord w;
        w.text = vocab[rng() % vocab.size()];
        // round to milliseconds so JSON round trips are exact
        w.start = std::round((start + static_cast<double>(i) * step) * 1000.0) / 1000.0;
        w.end = std::round((start + (static_cast<double>(i) + 0.8) * step) * 1000.0) / 1000.0;
        t.words.push_back(std::move(w));
    }
    s.turns.push_back(std::move(t));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline double ms(double t) { return std::round(t * 1000.0) / 1000.0; }

// Conversation in which speakers take turns following `pattern` (indices into
// cast), with 2-6 s turns and 0.3-0.8 s pauses.
inline void converse(Script& s, std::mt19937_64& rng, const std::vector<Cast>& cast,
                     const std::vector<std::size_t>& pattern, std::size_t n_turns, double& clock) {
    for (std::size_t i = 0; i < n_turns; ++i) {
        const auto& who = cast[pattern[i % pattern.size()]];
        const double start = ms(clock + uniform(rng, 0.3, 0.8));
        const double end = ms(start + uniform(rng, 2.0, 6.0));
        add_turn(s, rng, who, start, end);
        clock = end;
    }
}

}  // namespace detail

// Three well-separated speakers, no diarization or ASR faults.
inline Script clean_scenario(std::uint64_t seed = 7) {
    Script s;
    s.recording_id = "clean";
    s.seed = seed;
    std::mt19937_64 rng(splitmix64(seed));
    const std::vector<detail::Cast> cast{{"therapist", "Physical Therapist", "therapist"},
                                         {"patient", "Patient", "patient"},
                                         {"son", "Son", "son"}};
    double clock = 0.0;
    detail::converse(s, rng, cast, {0, 1, 0, 1, 2, 1, 0, 2}, 48, clock);
    s.duration = detail::ms(clock + 1.0);
    return s;
}

// Two people; halfway through the patient moves away from the microphone and
// the diarizer hears a new voice for them.
inline Script split_speaker_scenario(std::uint64_t seed = 11) {
    Script s;
    s.recording_id = "split";
    s.seed = seed;
    std::mt19937_64 rng(splitmix64(seed));
    const std::vector<detail::Cast> before{{"therapist", "Physical Therapist", "therapist"},
                                           {"patient", "Patient", "patient"}};
    const std::vector<detail::Cast> after{{"therapist", "Physical Therapist", "therapist"},
                                          {"patient", "Patient", "patient@kitchen"}};
    double clock = 0.0;
    detail::converse(s, rng, before, {0, 1}, 30, clock);
    detail::converse(s, rng, after, {0, 1}, 30, clock);
    s.duration = detail::ms(clock + 1.0);
    return s;
}

// A long recording with slow environment drift and a third speaker who only
// interjects briefly, so short diarization windows miss them.
inline Script drift_scenario(std::uint64_t seed = 13, double duration = 600.0) {
    Script s;
    s.recording_id = "drift";
    s.seed = seed;
    s.embedding.drift_per_second = 0.0005;
    s.diarizer.min_speaker_seconds = 20.0;
    std::mt19937_64 rng(splitmix64(seed));
    const detail::Cast a{"therapist", "Physical Therapist", "therapist"};
    const detail::Cast b{"patient", "Patient", "patient"};
    const detail::Cast c{"daughter", "Daughter", "daughter"};
    double clock = 0.0;
    std::size_t turn = 0;
    double next_c = 20.0;
    while (clock < duration - 8.0) {
        const double start = detail::ms(clock + detail::uniform(rng, 0.3, 0.8));
        if (start >= next_c) {
            const double end = detail::ms(start + 5.0);
            if (end > duration - 1.0) break;
            detail::add_turn(s, rng, c, start, end);
            clock = end;
            next_c += 40.0;
            continue;
        }
        const auto& who = turn++ % 2 == 0 ? a : b;
        const double end = detail::ms(std::min(duration - 1.0, start + detail::uniform(rng, 2.0, 6.0)));
        detail::add_turn(s, rng, who, start, end);
        clock = end;
    }
    s.duration = duration;
    return s;
}

// Clean conversation plus reconciliation faults: a turn the diarizer misses
// (orphan words), a turn whose first ASR pass is lost (empty segment that a
// re-run recovers), and a non-speech noise burst the diarizer reports.
inline Script messy_scenario(std::uint64_t seed = 17) {
    Script s = clean_scenario(seed);
    s.recording_id = "messy";
    if (s.turns.size() > 10) {
        s.turns[5].sd_missed = true;
        s.turns[8].asr_first_pass_missed = true;
    }
    ScriptTurn noise;
    noise.speaker = "tv";
    noise.identity = "Television";
    noise.voice = "tv";
    noise.start = s.turns.back().end + 0.2;
    noise.end = noise.start + 0.5;
    noise.in_reference = false;
    s.turns.push_back(noise);
    s.duration = detail::ms(noise.end + 1.0);
    return s;
}

}  // namespace sdpost::mock
