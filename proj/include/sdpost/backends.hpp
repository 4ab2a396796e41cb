#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdpost/core.hpp"

namespace sdpost {

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class BackendTimeout : public BackendUnavailable {
public:
    using BackendUnavailable::BackendUnavailable;
};

class InvalidAudio : public Error {
public:
    using Error::Error;
};

class WindowTooShort : public Error {
public:
    using Error::Error;
};

struct AudioRef {
    std::string uri;
    int sample_rate_hz = 16000;
    int channel_count = 1;
    double duration = 0.0;  // seconds
};

// The pipeline works on single-channel recordings only.
inline void require_mono(const AudioRef& audio) {
    if (audio.channel_count != 1) {
        throw InvalidAudio(audio.uri + ": expected 1 channel, got " +
                           std::to_string(audio.channel_count));
    }
    if (audio.sample_rate_hz <= 0) throw InvalidAudio(audio.uri + ": bad sample rate");
}

struct BackendConfig {
    std::string endpoint;
    std::string model_name;
    double timeout = 60.0;  // seconds
    int max_retries = 3;
    std::optional<std::string> auth_token;

    void validate() const {
        if (!(timeout > 0.0)) throw InvalidArgument("backend timeout must be > 0");
        if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    }
};

struct LlmResponse {
    std::string text;
    std::optional<nlohmann::json> parsed;
};

// ─── Model roles ────────────────────────────────────────────────────────────
//
// Implementations must be safe to call concurrently through a const handle,
// except LanguageModel, which the pipeline drives sequentially.

class Diarizer {
public:
    virtual ~Diarizer() = default;

    // Segments sorted by start, without words. With a window, only segments
    // intersecting it are returned, clipped to it.
    virtual std::vector<DiarSegment> diarize(const AudioRef& audio,
                                             std::optional<TimeInterval> window) const = 0;
};

class SpeechRecognizer {
public:
    virtual ~SpeechRecognizer() = default;

    // Words sorted by start. Timestamps are absolute recording times even when
    // a window is given; only words starting inside the window are returned.
    virtual std::vector<Word> transcribe(const AudioRef& audio,
                                         std::optional<TimeInterval> window) const = 0;
};

class EmbeddingExtractor {
public:
    virtual ~EmbeddingExtractor() = default;

    virtual Embedding embed(const AudioRef& audio, const TimeInterval& window) const = 0;

    // Shortest window the extractor accepts, seconds.
    virtual double min_window() const { return 0.1; }
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual LlmResponse complete(const std::string& prompt) = 0;
};

struct Backends {
    std::shared_ptr<const Diarizer> diarizer;
    std::shared_ptr<const SpeechRecognizer> asr;
    std::shared_ptr<const EmbeddingExtractor> embedder;
    std::shared_ptr<LanguageModel> llm;
};

}  // namespace sdpost
