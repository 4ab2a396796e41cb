#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdpost/adjudicator.hpp"
#include "sdpost/backends.hpp"
#include "sdpost/chunkrec.hpp"
#include "sdpost/metrics.hpp"
#include "sdpost/parallel.hpp"
#include "sdpost/reconcile.hpp"
#include "sdpost/refine.hpp"
#include "sdpost/reverify.hpp"

namespace sdpost {

struct PipelineConfig {
    double chunk_length = 250.0;
    double overlap = 5.0;
    std::size_t knn_k = 10;
    double llm_confidence_threshold = 0.9;
    double levenshtein_threshold = 0.9;
    double collar = 0.25;
    double orphan_gap = 1.0;
    double cluster_threshold = 0.65;
    double merge_max_gap = 0.0;
    bool safeguards = false;
    std::size_t max_parallel = 4;  // concurrent backend calls per recording
    std::size_t context_before = 6;
    std::size_t context_after = 6;
    std::size_t label_word_budget = 2000;
    std::size_t identity_word_budget = 8000;
    std::string label_prompt_template = std::string(prompts::kSegmentLabelTemplateV1);
    BackendConfig llm;

    void validate() const {
        auto unit = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must be in [0, 1]");
        };
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be > 0");
        };
        unit(llm_confidence_threshold, "llm_confidence_threshold");
        unit(levenshtein_threshold, "levenshtein_threshold");
        unit(cluster_threshold, "cluster_threshold");
        positive(chunk_length, "chunk_length");
        positive(overlap, "overlap");
        positive(orphan_gap, "orphan_gap");
        if (overlap >= chunk_length) throw InvalidArgument("overlap must be shorter than chunk_length");
        if (!(collar >= 0.0)) throw InvalidArgument("collar must be >= 0");
        if (!(merge_max_gap >= 0.0)) throw InvalidArgument("merge_max_gap must be >= 0");
        if (knn_k == 0) throw InvalidArgument("knn_k must be >= 1");
        if (max_parallel == 0) throw InvalidArgument("max_parallel must be >= 1");
        if (label_prompt_template.find("{{conversation}}") == std::string::npos) {
            throw InvalidArgument("label prompt template lacks {{conversation}}");
        }
        llm.validate();
    }

    // Everything except secrets.
    nlohmann::json echo() const {
        return {{"chunk_length", chunk_length},
                {"overlap", overlap},
                {"knn_k", knn_k},
                {"llm_confidence_threshold", llm_confidence_threshold},
                {"levenshtein_threshold", levenshtein_threshold},
                {"collar", collar},
                {"orphan_gap", orphan_gap},
                {"cluster_threshold", cluster_threshold},
                {"merge_max_gap", merge_max_gap},
                {"safeguards", safeguards},
                {"context_before", context_before},
                {"context_after", context_after},
                {"label_word_budget", label_word_budget},
                {"identity_word_budget", identity_word_budget},
                {"llm", {{"endpoint", llm.endpoint}, {"model", llm.model_name}, {"timeout", llm.timeout},
                         {"max_retries", llm.max_retries}}}};
    }
};

// ─── Trace ──────────────────────────────────────────────────────────────────

struct PipelineTrace {
    std::vector<std::pair<std::string, nlohmann::json>> stages;

    const nlohmann::json* find(const std::string& stage) const {
        for (const auto& [name, snap] : stages)
            if (name == stage) return &snap;
        return nullptr;
    }
};

// Called after each stage completes, in order.
using TraceSink = std::function<void(std::size_t stage_index, const std::string& stage, const nlohmann::json&)>;

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, PipelineTrace partial)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)), trace_(std::move(partial)) {}

    const std::string& stage() const { return stage_; }
    const PipelineTrace& trace() const { return trace_; }

private:
    std::string stage_;
    PipelineTrace trace_;
};

// ─── JSON views ─────────────────────────────────────────────────────────────

inline std::string_view to_string(SegmentOrigin o) {
    switch (o) {
        case SegmentOrigin::Diarizer: return "Diarizer";
        case SegmentOrigin::OrphanWords: return "OrphanWords";
        case SegmentOrigin::Chunked: return "Chunked";
    }
    return "?";
}

inline nlohmann::json words_json(const std::vector<Word>& words) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& w : words) {
        out.push_back({{"text", w.text}, {"start", w.interval.start}, {"end", w.interval.end}});
    }
    return out;
}

inline nlohmann::json segment_json(std::size_t id, const DiarSegment& s) {
    return {{"id", id},
            {"start", s.interval.start},
            {"end", s.interval.end},
            {"label", s.label.value},
            {"origin", to_string(s.origin)},
            {"text", join_words(s.words)}};
}

inline nlohmann::json identity_map_json(const IdentityMap& map) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [label, id] : map.entries()) out[label.value] = id.value;
    return out;
}

inline nlohmann::json final_segment_json(const FinalSegment& s) {
    return {{"start", s.interval.start},
            {"end", s.interval.end},
            {"identity", s.identity.value},
            {"provenance", to_string(s.provenance)},
            {"source_ids", s.source_ids},
            {"words", words_json(s.words)}};
}

// ─── Pipeline ───────────────────────────────────────────────────────────────

struct PipelineResult {
    std::vector<FinalSegment> segments;
    IdentityMap identity_map;
    std::vector<DiarSegment> reconciled;  // SD+ASR after re-run policy (the baseline)
    PipelineTrace trace;
};

inline Annotation to_annotation(const std::vector<DiarSegment>& segs) {
    Annotation a;
    for (const auto& s : segs)
        if (s.interval.end > s.interval.start) a.add(s.interval.start, s.interval.end, s.label.value);
    return a;
}

inline Annotation to_annotation(const std::vector<FinalSegment>& segs) {
    Annotation a;
    for (const auto& s : segs)
        if (s.interval.end > s.interval.start) a.add(s.interval.start, s.interval.end, s.identity.value);
    return a;
}

namespace detail {

class StageRunner {
public:
    StageRunner(PipelineTrace& trace, const TraceSink& sink) : trace_(trace), sink_(sink) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what(), trace_);
        }
    }

    void record(const std::string& stage, nlohmann::json snapshot) {
        trace_.stages.emplace_back(stage, std::move(snapshot));
        if (sink_) sink_(trace_.stages.size(), stage, trace_.stages.back().second);
    }

private:
    PipelineTrace& trace_;
    const TraceSink& sink_;
};

}  // namespace detail

// Chunked SD -> ASR -> align -> re-run policy -> embeddings + re-verification
// -> identity detection -> LLM labels for flagged segments -> identity-mapped
// refinement -> merge -> duplicate cleaning.
inline PipelineResult run_pipeline(const AudioRef& audio, const Backends& backends, const PipelineConfig& config,
                                   const TraceSink& sink = {}) {
    config.validate();
    require_mono(audio);
    if (!backends.diarizer || !backends.asr || !backends.embedder || !backends.llm) {
        throw InvalidArgument("pipeline needs all four backends");
    }
    PipelineResult result;
    detail::StageRunner stage(result.trace, sink);

    auto sd = stage.run("diarize", [&] {
        return diarize_chunked(audio, *backends.diarizer, *backends.embedder, config.chunk_length, config.overlap,
                               config.cluster_threshold, config.max_parallel);
    });
    {
        nlohmann::json snap{{"windows", nlohmann::json::array()}, {"label_mapping", nlohmann::json::array()}};
        for (const auto& w : sd.plan.windows) snap["windows"].push_back({w.start, w.end});
        for (const auto& [key, global] : sd.mapping) {
            snap["label_mapping"].push_back({{"chunk", key.first}, {"local", key.second.value}, {"global", global.value}});
        }
        snap["segments"] = nlohmann::json::array();
        for (std::size_t i = 0; i < sd.segments.size(); ++i) snap["segments"].push_back(segment_json(i, sd.segments[i]));
        stage.record("diarize", std::move(snap));
    }

    const auto words = stage.run("transcribe", [&] { return backends.asr->transcribe(audio, std::nullopt); });
    stage.record("transcribe", {{"word_count", words.size()}, {"words", words_json(words)}});

    const auto aligned = stage.run("align", [&] { return align(sd.segments, words, config.orphan_gap); });
    {
        nlohmann::json snap{{"segments", nlohmann::json::array()}, {"mismatches", nlohmann::json::array()}};
        for (std::size_t i = 0; i < aligned.segments.size(); ++i)
            snap["segments"].push_back(segment_json(i, aligned.segments[i]));
        for (const auto& m : aligned.mismatches) {
            snap["mismatches"].push_back(
                {{"kind", m.kind == MismatchKind::OrphanWords ? "OrphanWords" : "EmptySegment"},
                 {"align_index", m.segment_index}});
        }
        stage.record("align", std::move(snap));
    }

    const auto reconciled = stage.run("rerun", [&] {
        return rerun_mismatches(aligned, *backends.asr, audio, config.levenshtein_threshold, config.max_parallel);
    });
    result.reconciled = reconciled.segments;
    const auto& segs = result.reconciled;
    {
        nlohmann::json snap{{"segments", nlohmann::json::array()}, {"dropped", nlohmann::json::array()}};
        for (std::size_t i = 0; i < segs.size(); ++i) snap["segments"].push_back(segment_json(i, segs[i]));
        for (const auto& d : reconciled.dropped) {
            auto j = segment_json(0, d);
            j.erase("id");
            snap["dropped"].push_back(std::move(j));
        }
        stage.record("rerun", std::move(snap));
    }

    const auto reverified = stage.run("reverify", [&] {
        std::vector<std::optional<Embedding>> emb(segs.size());
        parallel_for(segs.size(), config.max_parallel, [&](std::size_t i) {
            if (segs[i].interval.duration() < backends.embedder->min_window()) return;
            try {
                emb[i] = backends.embedder->embed(audio, segs[i].interval);
            } catch (const WindowTooShort&) {
            }
        });
        return reverify_segments(segs, emb, config.knn_k);
    });
    {
        nlohmann::json snap = nlohmann::json::array();
        for (const auto& r : reverified) {
            nlohmann::json labels = nlohmann::json::array();
            for (const auto& l : r.neighbor_labels) labels.push_back(l.value);
            snap.push_back({{"id", r.segment_id},
                            {"original", r.original.value},
                            {"reverified", r.reverified.value},
                            {"neighbors", r.neighbor_ids},
                            {"neighbor_labels", std::move(labels)},
                            {"low_confidence", r.low_confidence}});
        }
        stage.record("reverify", std::move(snap));
    }

    if (segs.empty()) {
        stage.record("detect_identities", {{"skipped", "empty transcript"}});
    } else {
        const auto detected = stage.run("detect_identities", [&] {
            IdentityPromptOptions opts;
            opts.safeguards = config.safeguards;
            opts.word_budget = config.identity_word_budget;
            return detect_identities(segs, *backends.llm, opts);
        });
        result.identity_map = detected.map;
        stage.record("detect_identities", {{"identity_map", identity_map_json(detected.map)},
                                           {"llm_calls", detected.prompts.size()},
                                           {"raw_response", detected.raw_response}});
    }

    std::vector<std::optional<LlmLabelResult>> llm_labels(segs.size());
    stage.run("label_segments", [&] {
        LabelPromptOptions opts;
        opts.context_before = config.context_before;
        opts.context_after = config.context_after;
        opts.word_budget = config.label_word_budget;
        opts.template_text = config.label_prompt_template;
        for (const auto& r : reverified) {
            if (r.low_confidence) llm_labels[r.segment_id] = label_segment(segs, r.segment_id, *backends.llm, opts);
        }
        return 0;
    });
    {
        nlohmann::json snap = nlohmann::json::array();
        for (const auto& l : llm_labels) {
            if (!l) continue;
            snap.push_back({{"id", l->segment_id},
                            {"llm_label", l->llm_label.value},
                            {"confidence", l->confidence},
                            {"confident", is_confident(*l, config.llm_confidence_threshold)},
                            {"raw_response", l->raw_response}});
        }
        stage.record("label_segments", std::move(snap));
    }

    auto refined = stage.run("refine", [&] {
        std::vector<FinalSegment> out;
        out.reserve(segs.size());
        for (const auto& r : reverified) {
            AdjudicationRecord rec{r.segment_id, r.original, r.reverified, llm_labels[r.segment_id]};
            out.push_back(refine_segment(rec, segs[r.segment_id], result.identity_map,
                                         config.llm_confidence_threshold));
        }
        return out;
    });
    {
        nlohmann::json snap = nlohmann::json::array();
        for (const auto& f : refined) {
            snap.push_back({{"id", f.source_ids.front()},
                            {"identity", f.identity.value},
                            {"provenance", to_string(f.provenance)}});
        }
        stage.record("refine", std::move(snap));
    }

    auto merged = stage.run("merge", [&] { return merge_adjacent(refined, config.merge_max_gap); });
    {
        nlohmann::json snap = nlohmann::json::array();
        for (std::size_t i = 0; i < merged.size(); ++i)
            snap.push_back({{"index", i}, {"identity", merged[i].identity.value}, {"source_ids", merged[i].source_ids}});
        stage.record("merge", std::move(snap));
    }

    std::vector<std::size_t> removed;
    result.segments = stage.run("clean_duplicates", [&] { return clean_duplicates(merged, &removed); });
    {
        nlohmann::json snap{{"removed", nlohmann::json::array()}, {"final", nlohmann::json::array()}};
        for (auto i : removed) snap["removed"].push_back({{"merge_index", i}, {"source_ids", merged[i].source_ids}});
        for (const auto& f : result.segments) snap["final"].push_back({{"identity", f.identity.value}, {"source_ids", f.source_ids}});
        stage.record("clean_duplicates", std::move(snap));
    }
    return result;
}

// The per-recording output document.
inline nlohmann::json output_json(const std::string& recording_id, const PipelineResult& r,
                                  const PipelineConfig& config) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : r.segments) segs.push_back(final_segment_json(s));
    return {{"recording_id", recording_id},
            {"segments", std::move(segs)},
            {"identity_map", identity_map_json(r.identity_map)},
            {"config_echo", config.echo()}};
}

// RTTM labels cannot contain whitespace.
inline std::string rttm_safe(std::string label) {
    std::replace_if(label.begin(), label.end(), [](unsigned char c) { return std::isspace(c) != 0; }, '_');
    return label;
}

inline std::string output_rttm(const std::string& recording_id, const std::vector<FinalSegment>& segs) {
    Annotation a;
    for (const auto& s : segs) a.add(s.interval.start, s.interval.end, rttm_safe(s.identity.value));
    return format_rttm(rttm_safe(recording_id), a);
}

// ─── Chunk-length sweep ─────────────────────────────────────────────────────

struct SweepItem {
    AudioRef audio;
    Backends backends;
    Annotation reference;
};

struct SweepRow {
    double chunk_length = 0.0;
    DerReport report;  // duration-weighted over the audio set
    std::vector<DerReport> per_file;
};

// Chunked SD alone (no ASR or LLM stages), scored against each reference.
inline std::vector<SweepRow> sweep_chunks(const std::vector<SweepItem>& items, const std::vector<double>& lengths,
                                          const PipelineConfig& config) {
    if (lengths.empty()) throw InvalidArgument("sweep needs at least one chunk length");
    std::vector<SweepRow> rows;
    if (items.empty()) return rows;
    for (double len : lengths) {
        SweepRow row;
        row.chunk_length = len;
        for (const auto& it : items) {
            const auto sd = diarize_chunked(it.audio, *it.backends.diarizer, *it.backends.embedder, len,
                                            config.overlap, config.cluster_threshold, config.max_parallel);
            row.per_file.push_back(der(it.reference, to_annotation(sd.segments), config.collar));
        }
        row.report = aggregate_micro(row.per_file);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace sdpost
