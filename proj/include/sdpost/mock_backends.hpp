#pragma once

// Deterministic stand-ins for the four model roles, all driven by one JSON
// "mock script" describing who speaks when and what they say.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdpost/adjudicator.hpp"
#include "sdpost/backends.hpp"
#include "sdpost/core.hpp"
#include "sdpost/metrics.hpp"

namespace sdpost::mock {

// ─── Script ─────────────────────────────────────────────────────────────────

struct ScriptWord {
    std::string text;
    double start = 0.0;
    double end = 0.0;
    // What a windowed (re-run) ASR pass hears instead; "" means nothing.
    std::optional<std::string> rerun_text;
};

struct ScriptTurn {
    std::string speaker;   // reference speaker
    std::string identity;  // real-world identity the LLM should recover
    std::string voice;     // acoustic identity; defaults to speaker
    double start = 0.0;
    double end = 0.0;
    std::vector<ScriptWord> words;
    bool sd_missed = false;              // diarizer does not see this turn
    bool asr_first_pass_missed = false;  // full-recording ASR pass drops these words
    bool in_reference = true;            // part of the ground-truth annotation
};

struct EmbeddingSettings {
    std::size_t dim = 192;
    double noise = 0.05;             // per-dimension Gaussian sigma
    double drift_per_second = 0.0;   // slow environment drift of every voice
    double min_window = 0.1;
};

struct DiarizerSettings {
    // A voice with less speech than this inside one diarization window is
    // folded into that window's dominant voice (0 disables).
    double min_speaker_seconds = 0.0;
    std::size_t max_speakers = 0;  // 0 = unlimited
};

struct LlmSettings {
    double confidence = 0.95;
    bool unreachable = false;
};

struct Script {
    std::string recording_id = "mock";
    double duration = 0.0;  // 0 = end of the last turn
    std::uint64_t seed = 0;
    EmbeddingSettings embedding;
    DiarizerSettings diarizer;
    LlmSettings llm;
    std::vector<ScriptTurn> turns;

    double total_duration() const {
        if (duration > 0.0) return duration;
        double d = 0.0;
        for (const auto& t : turns) d = std::max(d, t.end);
        return d;
    }
};

inline Script parse_script(const nlohmann::json& doc) {
    Script s;
    const nlohmann::json* turns = &doc;
    if (doc.is_object()) {
        s.recording_id = doc.value("recording_id", s.recording_id);
        s.duration = doc.value("duration", 0.0);
        s.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("embedding")) {
            const auto& e = doc["embedding"];
            s.embedding.dim = e.value("dim", s.embedding.dim);
            s.embedding.noise = e.value("noise", s.embedding.noise);
            s.embedding.drift_per_second = e.value("drift_per_second", s.embedding.drift_per_second);
            s.embedding.min_window = e.value("min_window", s.embedding.min_window);
        }
        if (doc.contains("diarizer")) {
            const auto& d = doc["diarizer"];
            s.diarizer.min_speaker_seconds = d.value("min_speaker_seconds", 0.0);
            s.diarizer.max_speakers = d.value("max_speakers", std::size_t{0});
        }
        if (doc.contains("llm")) {
            const auto& l = doc["llm"];
            s.llm.confidence = l.value("confidence", s.llm.confidence);
            s.llm.unreachable = l.value("unreachable", false);
        }
        if (!doc.contains("turns")) throw InvalidArgument("mock script has no \"turns\"");
        turns = &doc["turns"];
    }
    if (!turns->is_array()) throw InvalidArgument("mock script turns must be an array");
    for (const auto& t : *turns) {
        ScriptTurn turn;
        turn.speaker = t.at("speaker").get<std::string>();
        turn.identity = t.value("identity", turn.speaker);
        turn.voice = t.value("voice", turn.speaker);
        turn.start = t.at("start").get<double>();
        turn.end = t.at("end").get<double>();
        if (!TimeInterval{turn.start, turn.end}.valid()) throw InvalidArgument("mock turn has invalid times");
        turn.sd_missed = t.value("sd_missed", false);
        turn.asr_first_pass_missed = t.value("asr_first_pass_missed", false);
        turn.in_reference = t.value("in_reference", true);
        if (t.contains("words")) {
            for (const auto& w : t["words"]) {
                ScriptWord sw;
                sw.text = w.at("text").get<std::string>();
                sw.start = w.at("start").get<double>();
                sw.end = w.at("end").get<double>();
                if (w.contains("rerun_text")) sw.rerun_text = w["rerun_text"].get<std::string>();
                turn.words.push_back(std::move(sw));
            }
        }
        s.turns.push_back(std::move(turn));
    }
    return s;
}

inline nlohmann::json to_json(const Script& s) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : s.turns) {
        nlohmann::json words = nlohmann::json::array();
        for (const auto& w : t.words) {
            nlohmann::json jw{{"text", w.text}, {"start", w.start}, {"end", w.end}};
            if (w.rerun_text) jw["rerun_text"] = *w.rerun_text;
            words.push_back(std::move(jw));
        }
        nlohmann::json jt{{"speaker", t.speaker}, {"identity", t.identity}, {"start", t.start},
                          {"end", t.end}, {"words", std::move(words)}};
        if (t.voice != t.speaker) jt["voice"] = t.voice;
        if (t.sd_missed) jt["sd_missed"] = true;
        if (t.asr_first_pass_missed) jt["asr_first_pass_missed"] = true;
        if (!t.in_reference) jt["in_reference"] = false;
        turns.push_back(std::move(jt));
    }
    return {{"recording_id", s.recording_id},
            {"duration", s.duration},
            {"seed", s.seed},
            {"embedding",
             {{"dim", s.embedding.dim},
              {"noise", s.embedding.noise},
              {"drift_per_second", s.embedding.drift_per_second},
              {"min_window", s.embedding.min_window}}},
            {"diarizer",
             {{"min_speaker_seconds", s.diarizer.min_speaker_seconds},
              {"max_speakers", s.diarizer.max_speakers}}},
            {"llm", {{"confidence", s.llm.confidence}, {"unreachable", s.llm.unreachable}}},
            {"turns", std::move(turns)}};
}

inline Script load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open mock script " + path);
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InvalidArgument("mock script " + path + " is not valid JSON");
    return parse_script(doc);
}

inline AudioRef audio_ref(const Script& s, std::string uri = {}) {
    AudioRef a;
    a.uri = uri.empty() ? s.recording_id : std::move(uri);
    a.duration = s.total_duration();
    return a;
}

// Ground truth: every in-reference turn labeled by its speaker.
inline Annotation reference_annotation(const Script& s) {
    Annotation a;
    for (const auto& t : s.turns) {
        if (t.in_reference && t.end > t.start) a.add(t.start, t.end, t.speaker);
    }
    return a;
}

inline std::vector<std::string> reference_words(const Script& s) {
    std::vector<std::pair<double, std::string>> ws;
    for (const auto& t : s.turns)
        if (t.in_reference)
            for (const auto& w : t.words) ws.emplace_back(w.start, w.text);
    std::stable_sort(ws.begin(), ws.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (auto& [t, w] : ws) out.push_back(std::move(w));
    return out;
}

// Index of the turn overlapping `iv` the most (first on ties), if any.
inline std::optional<std::size_t> dominant_turn(const Script& s, const TimeInterval& iv) {
    std::optional<std::size_t> best;
    double best_ov = 0.0;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        const double ov = interval_overlap(iv, {s.turns[i].start, s.turns[i].end});
        if (ov > best_ov) {
            best_ov = ov;
            best = i;
        }
    }
    if (!best) {
        // zero-length probe: use containment
        for (std::size_t i = 0; i < s.turns.size(); ++i) {
            if (s.turns[i].start <= iv.start && iv.start <= s.turns[i].end) return i;
        }
    }
    return best;
}

// ─── Deterministic randomness ───────────────────────────────────────────────

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t double_bits(double d) {
    std::uint64_t u = 0;
    std::memcpy(&u, &d, sizeof u);
    return u;
}

// Fills `out` with N(0, 1) samples from a generator seeded by `key`.
inline std::vector<double> gaussian_vector(std::uint64_t key, std::size_t dim) {
    std::mt19937_64 rng(splitmix64(key));
    std::vector<double> v(dim);
    for (auto& x : v) {
        // Box-Muller over the raw engine keeps the stream independent of the
        // standard library's distribution implementation.
        double u1 = 0.0;
        do {
            u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        } while (u1 <= 0.0);
        const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        x = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
    return v;
}

inline std::vector<double> unit_vector(std::uint64_t key, std::size_t dim) {
    auto v = gaussian_vector(key, dim);
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return v;
}

// ─── Backends ───────────────────────────────────────────────────────────────

// Returns the scripted turns as seen inside the window, with labels spk0,
// spk1, ... assigned by first appearance of each voice in that window, like a
// real diarizer whose labels mean nothing across calls.
class MockDiarizer : public Diarizer {
public:
    explicit MockDiarizer(Script script) : script_(std::move(script)) {}

    std::vector<DiarSegment> diarize(const AudioRef& audio, std::optional<TimeInterval> window) const override {
        require_mono(audio);
        const TimeInterval w = window.value_or(TimeInterval{0.0, script_.total_duration()});

        struct Piece {
            TimeInterval iv;
            std::string voice;
        };
        std::vector<Piece> pieces;
        for (const auto& t : script_.turns) {
            if (t.sd_missed) continue;
            const TimeInterval iv{std::max(t.start, w.start), std::min(t.end, w.end)};
            if (!(iv.end > iv.start)) continue;
            pieces.push_back({iv, t.voice});
        }
        std::stable_sort(pieces.begin(), pieces.end(),
                         [](const Piece& a, const Piece& b) { return a.iv.start < b.iv.start; });

        std::map<std::string, double> talk;
        std::vector<std::string> order;
        for (const auto& p : pieces) {
            if (talk.emplace(p.voice, 0.0).second) order.push_back(p.voice);
            talk[p.voice] += p.iv.duration();
        }
        // Fold voices the diarizer cannot resolve into the dominant one.
        std::map<std::string, std::string> effective;
        for (const auto& v : order) effective[v] = v;
        if (!order.empty()) {
            std::string dominant = order.front();
            for (const auto& v : order)
                if (talk[v] > talk[dominant]) dominant = v;
            std::vector<std::string> by_talk = order;
            std::stable_sort(by_talk.begin(), by_talk.end(),
                             [&](const auto& a, const auto& b) { return talk[a] > talk[b]; });
            for (std::size_t i = 0; i < by_talk.size(); ++i) {
                const auto& v = by_talk[i];
                const bool too_quiet = script_.diarizer.min_speaker_seconds > 0.0 &&
                                       talk[v] < script_.diarizer.min_speaker_seconds;
                const bool over_cap = script_.diarizer.max_speakers > 0 && i >= script_.diarizer.max_speakers;
                if (v != dominant && (too_quiet || over_cap)) effective[v] = dominant;
            }
        }
        std::map<std::string, std::string> label_of;
        std::vector<DiarSegment> out;
        for (const auto& p : pieces) {
            const auto& v = effective[p.voice];
            auto it = label_of.find(v);
            if (it == label_of.end()) {
                it = label_of.emplace(v, "spk" + std::to_string(label_of.size())).first;
            }
            DiarSegment s;
            s.interval = p.iv;
            s.label = SpeakerLabel{it->second};
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    Script script_;
};

// Full-recording calls model the first ASR pass; windowed calls model a
// re-run over a cropped segment.
class MockAsr : public SpeechRecognizer {
public:
    explicit MockAsr(Script script) : script_(std::move(script)) {}

    std::vector<Word> transcribe(const AudioRef& audio, std::optional<TimeInterval> window) const override {
        require_mono(audio);
        std::vector<Word> out;
        for (const auto& t : script_.turns) {
            for (const auto& w : t.words) {
                if (!window) {
                    if (t.asr_first_pass_missed) continue;
                    out.push_back({w.text, {w.start, w.end}, WordSource::InitialPass});
                    continue;
                }
                if (!window->contains(w.start)) continue;
                const std::string text = w.rerun_text.value_or(w.text);
                if (text.empty()) continue;
                out.push_back({text, {w.start, w.end}, WordSource::RerunPass});
            }
        }
        sort_words(out);
        return out;
    }

private:
    Script script_;
};

// Voice prototype (random unit vector per voice, optionally drifting with
// time) plus seeded Gaussian noise, renormalized. Identical windows give
// identical vectors.
class MockEmbedder : public EmbeddingExtractor {
public:
    explicit MockEmbedder(Script script) : script_(std::move(script)) {}

    Embedding embed(const AudioRef& audio, const TimeInterval& window) const override {
        require_mono(audio);
        if (window.duration() < min_window() || !(window.duration() > 0.0)) {
            throw WindowTooShort("embedding window of " + std::to_string(window.duration()) + " s");
        }
        const auto& cfg = script_.embedding;
        const auto turn = dominant_turn(script_, window);
        const std::string voice = turn ? script_.turns[*turn].voice : std::string("<silence>");
        const std::uint64_t voice_key = script_.seed ^ fnv1a(voice);
        auto v = unit_vector(voice_key, cfg.dim);
        if (cfg.drift_per_second != 0.0) {
            const auto dir = unit_vector(voice_key ^ fnv1a("#drift"), cfg.dim);
            const double amount = cfg.drift_per_second * 0.5 * (window.start + window.end);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += amount * dir[i];
        }
        const auto noise = gaussian_vector(
            splitmix64(script_.seed ^ double_bits(window.start)) ^ double_bits(window.end), cfg.dim);
        Embedding e;
        e.vector.reserve(cfg.dim);
        for (std::size_t i = 0; i < v.size(); ++i) e.vector.push_back(static_cast<float>(v[i] + cfg.noise * noise[i]));
        return e.normalized();
    }

    double min_window() const override { return script_.embedding.min_window; }

private:
    Script script_;
};

// An LLM that "understands" the conversation by looking the quoted time spans
// up in the script. Answers identity prompts with the scripted identities and
// segment-labeling prompts with the context label whose speaker matches.
class OracleLlm : public LanguageModel {
public:
    explicit OracleLlm(Script script) : script_(std::move(script)) {}

    LlmResponse complete(const std::string& prompt) override {
        if (script_.llm.unreachable) throw BackendUnavailable("mock LLM configured as unreachable");
        std::lock_guard lock(mu_);
        ++calls_;
        const auto lines = parse_lines(prompt);
        LlmResponse r;
        if (prompt.find(prompts::kIdentityInstruction) != std::string::npos) {
            r.text = answer_identity(lines);
        } else {
            r.text = answer_label(lines);
        }
        return r;
    }

    std::size_t calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    struct Line {
        TimeInterval iv;
        std::string speaker;
    };

    static std::vector<Line> parse_lines(const std::string& prompt) {
        std::vector<Line> out;
        std::istringstream in(prompt);
        std::string line;
        while (std::getline(in, line)) {
            if (line.size() < 5 || line.front() != '[') continue;
            const auto close = line.find("] ");
            const auto colon = line.find(": ", close == std::string::npos ? 0 : close);
            const auto dash = line.find('-', 1);
            if (close == std::string::npos || colon == std::string::npos || dash == std::string::npos || dash > close)
                continue;
            try {
                Line l;
                l.iv.start = std::stod(line.substr(1, dash - 1));
                l.iv.end = std::stod(line.substr(dash + 1, close - dash - 1));
                l.speaker = line.substr(close + 2, colon - close - 2);
                out.push_back(std::move(l));
            } catch (const std::exception&) {
            }
        }
        return out;
    }

    std::optional<std::string> identity_at(const TimeInterval& iv) const {
        const auto t = dominant_turn(script_, iv);
        if (!t) return std::nullopt;
        return script_.turns[*t].identity;
    }

    // label -> plurality scripted identity over that label's lines
    std::map<std::string, std::string> label_identities(const std::vector<Line>& lines) const {
        std::map<std::string, std::map<std::string, int>> votes;
        for (const auto& l : lines) {
            if (l.speaker == prompts::kTargetMarker || l.speaker == kUnknown) continue;
            if (auto id = identity_at(l.iv)) ++votes[l.speaker][*id];
            else votes[l.speaker];
        }
        std::map<std::string, std::string> out;
        for (const auto& [label, tally] : votes) {
            std::string best = kUnknown;
            int best_n = 0;
            for (const auto& [id, n] : tally)
                if (n > best_n) {
                    best = id;
                    best_n = n;
                }
            out[label] = best;
        }
        return out;
    }

    std::string answer_identity(const std::vector<Line>& lines) const {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [label, id] : label_identities(lines)) obj[label] = id;
        return "Here is the identity mapping:\n" + obj.dump();
    }

    std::string answer_label(const std::vector<Line>& lines) const {
        const auto target = std::find_if(lines.begin(), lines.end(),
                                         [](const Line& l) { return l.speaker == prompts::kTargetMarker; });
        nlohmann::json ans{{"label", kUnknown}, {"confidence", 0.5}};
        if (target != lines.end()) {
            if (const auto want = identity_at(target->iv)) {
                std::map<std::string, int> count;
                for (const auto& l : lines)
                    if (l.speaker != prompts::kTargetMarker) ++count[l.speaker];
                std::string best;
                int best_n = 0;
                for (const auto& [label, id] : label_identities(lines)) {
                    if (id == *want && count[label] > best_n) {
                        best = label;
                        best_n = count[label];
                    }
                }
                if (!best.empty()) ans = {{"label", best}, {"confidence", script_.llm.confidence}};
            }
        }
        return "Answer: " + ans.dump();
    }

    Script script_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

// Replays canned responses in order and records every prompt. Exhausted
// scripts raise BackendUnavailable.
class ScriptedLlm : public LanguageModel {
public:
    explicit ScriptedLlm(std::vector<std::string> responses) : responses_(responses.begin(), responses.end()) {}

    LlmResponse complete(const std::string& prompt) override {
        std::lock_guard lock(mu_);
        prompts_.push_back(prompt);
        if (responses_.empty()) throw BackendUnavailable("scripted LLM has no responses left");
        LlmResponse r{responses_.front(), std::nullopt};
        responses_.pop_front();
        return r;
    }

    std::vector<std::string> prompts() const {
        std::lock_guard lock(mu_);
        return prompts_;
    }

private:
    mutable std::mutex mu_;
    std::deque<std::string> responses_;
    std::vector<std::string> prompts_;
};

inline Backends make_backends(const Script& s) {
    Backends b;
    b.diarizer = std::make_shared<MockDiarizer>(s);
    b.asr = std::make_shared<MockAsr>(s);
    b.embedder = std::make_shared<MockEmbedder>(s);
    b.llm = std::make_shared<OracleLlm>(s);
    return b;
}

}  // namespace sdpost::mock
