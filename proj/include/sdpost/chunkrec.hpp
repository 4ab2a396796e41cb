#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdpost/backends.hpp"
#include "sdpost/core.hpp"
#include "sdpost/parallel.hpp"
#include "sdpost/reverify.hpp"

namespace sdpost {

class InvalidPlan : public Error {
public:
    using Error::Error;
};

struct ChunkPlan {
    double chunk_length = 250.0;
    double overlap = 5.0;
    std::vector<TimeInterval> windows;
};

// Windows of chunk_length at stride chunk_length - overlap; the last one is
// clipped to the recording. Recordings shorter than one chunk get a single
// window.
inline ChunkPlan plan_chunks(double duration, double chunk_length = 250.0, double overlap = 5.0) {
    if (!(chunk_length > 0.0)) throw InvalidPlan("chunk length must be > 0");
    if (!(overlap >= 0.0) || overlap >= chunk_length) {
        throw InvalidPlan("overlap must be in [0, chunk_length)");
    }
    if (!(duration > 0.0)) throw InvalidPlan("recording duration must be > 0");
    ChunkPlan plan{chunk_length, overlap, {}};
    const double stride = chunk_length - overlap;
    for (std::size_t i = 0;; ++i) {
        const double start = static_cast<double>(i) * stride;
        const double end = std::min(duration, start + chunk_length);
        plan.windows.push_back({start, end});
        if (end >= duration) break;
    }
    return plan;
}

struct ChunkSpeaker {
    std::size_t chunk_index = 0;
    SpeakerLabel local_label;
    std::optional<Embedding> mean_embedding;  // absent when no segment was long enough to embed
    double total_duration = 0.0;
};

using ChunkLabelKey = std::pair<std::size_t, SpeakerLabel>;
using ChunkLabelMapping = std::map<ChunkLabelKey, SpeakerLabel>;

// Unweighted mean of normalized vectors, re-normalized.
inline Embedding mean_embedding(const std::vector<Embedding>& es) {
    if (es.empty()) throw InvalidArgument("mean of no embeddings");
    const std::size_t dim = es.front().dim();
    std::vector<double> acc(dim, 0.0);
    for (const auto& e : es) {
        if (e.dim() != dim) throw DimensionMismatch("embedding dims differ");
        const auto n = e.normalized();
        for (std::size_t i = 0; i < dim; ++i) acc[i] += n.vector[i];
    }
    Embedding out;
    for (double v : acc) out.vector.push_back(static_cast<float>(v / static_cast<double>(es.size())));
    return out.normalized();
}

// Average-linkage agglomerative clustering on cosine similarity. Clusters
// merge while the best pair's average similarity is >= sim_threshold; two
// speakers from the same chunk never share a cluster. Global labels are
// "spk<N>" numbered by each cluster's first member in input order. A single
// chunk keeps its local labels.
inline ChunkLabelMapping unify_labels(const std::vector<ChunkSpeaker>& speakers, double sim_threshold) {
    ChunkLabelMapping out;
    if (speakers.empty()) return out;

    std::optional<std::size_t> dim;
    for (const auto& s : speakers) {
        if (!s.mean_embedding) continue;
        if (dim && s.mean_embedding->dim() != *dim) throw DimensionMismatch("chunk speaker embedding dims differ");
        dim = s.mean_embedding->dim();
    }

    const bool single_chunk = std::all_of(speakers.begin(), speakers.end(), [&](const ChunkSpeaker& s) {
        return s.chunk_index == speakers.front().chunk_index;
    });
    if (single_chunk) {
        for (const auto& s : speakers) out[{s.chunk_index, s.local_label}] = s.local_label;
        return out;
    }

    const std::size_t n = speakers.size();
    std::vector<std::optional<Embedding>> unit(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (speakers[i].mean_embedding) unit[i] = speakers[i].mean_embedding->normalized();
    }
    // Pairwise similarity; pairs lacking an embedding never merge.
    std::vector<std::vector<double>> sim(n, std::vector<double>(n, -2.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (unit[i] && unit[j]) sim[i][j] = sim[j][i] = dot(unit[i]->vector, unit[j]->vector);

    std::vector<std::vector<std::size_t>> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double s = 0.0;
        for (auto i : a)
            for (auto j : b) {
                if (speakers[i].chunk_index == speakers[j].chunk_index) return -3.0;
                if (sim[i][j] < -1.5) return -3.0;
                s += sim[i][j];
            }
        return s / static_cast<double>(a.size() * b.size());
    };

    while (clusters.size() > 1) {
        double best = -3.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double l = linkage(clusters[i], clusters[j]);
                if (l > best) {
                    best = l;
                    bi = i;
                    bj = j;
                }
            }
        if (best < sim_threshold || best < -1.0) break;
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(clusters[bi].begin(), clusters[bi].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const SpeakerLabel global{"spk" + std::to_string(c)};
        for (auto i : clusters[c]) out[{speakers[i].chunk_index, speakers[i].local_label}] = global;
    }
    return out;
}

// Globalizes per-chunk labels and resolves chunk overlaps at their midpoint:
// the earlier chunk owns time before the midpoint, the later chunk after it.
// Pieces of one turn split by a midpoint cut are fused back together.
inline std::vector<DiarSegment> stitch(const std::vector<std::pair<std::size_t, std::vector<DiarSegment>>>& per_chunk,
                                       const ChunkLabelMapping& mapping, const ChunkPlan& plan) {
    const std::size_t n = plan.windows.size();
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = i == 0 ? plan.windows[i].start
                       : 0.5 * (plan.windows[i].start + std::min(plan.windows[i - 1].end, plan.windows[i].end));
        hi[i] = i + 1 == n ? plan.windows[i].end
                           : 0.5 * (plan.windows[i + 1].start + std::min(plan.windows[i].end, plan.windows[i + 1].end));
    }

    struct Piece {
        DiarSegment seg;
        std::size_t chunk;
    };
    std::vector<Piece> pieces;
    for (const auto& [chunk, segs] : per_chunk) {
        if (chunk >= n) throw InvalidArgument("chunk index outside plan");
        for (const auto& s : segs) {
            const auto it = mapping.find({chunk, s.label});
            if (it == mapping.end()) throw InvalidArgument("no global label for " + s.label.value);
            DiarSegment g = s;
            g.label = it->second;
            g.origin = n > 1 ? SegmentOrigin::Chunked : s.origin;
            g.interval.start = std::max(g.interval.start, lo[chunk]);
            g.interval.end = std::min(g.interval.end, hi[chunk]);
            if (!(g.interval.end > g.interval.start)) continue;
            pieces.push_back({std::move(g), chunk});
        }
    }
    std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        return by_start(a.seg, b.seg);
    });

    std::vector<DiarSegment> out;
    std::vector<std::size_t> out_chunk;
    for (auto& p : pieces) {
        bool fused = false;
        for (std::size_t k = out.size(); k-- > 0;) {
            auto& q = out[k];
            if (q.interval.end < p.seg.interval.start) continue;
            // only pieces meeting exactly at the cut between neighbouring chunks
            if (out_chunk[k] + 1 == p.chunk && q.label == p.seg.label && q.interval.end == lo[p.chunk] &&
                p.seg.interval.start == lo[p.chunk]) {
                q.interval.end = p.seg.interval.end;
                fused = true;
                out_chunk[k] = p.chunk;
                break;
            }
        }
        if (fused) continue;
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const DiarSegment& q) {
            return q.interval == p.seg.interval && q.label == p.seg.label;
        });
        if (duplicate) continue;
        out.push_back(std::move(p.seg));
        out_chunk.push_back(p.chunk);
    }
    std::stable_sort(out.begin(), out.end(), by_start);
    return out;
}

struct ChunkedDiarization {
    ChunkPlan plan;
    std::vector<std::pair<std::size_t, std::vector<DiarSegment>>> per_chunk;
    std::vector<ChunkSpeaker> speakers;
    ChunkLabelMapping mapping;
    std::vector<DiarSegment> segments;
};

// Runs SD per chunk and reconciles labels across chunks with per-chunk mean
// speaker embeddings.
inline ChunkedDiarization diarize_chunked(const AudioRef& audio, const Diarizer& diarizer,
                                          const EmbeddingExtractor& embedder, double chunk_length,
                                          double overlap, double cluster_threshold, std::size_t max_parallel) {
    require_mono(audio);
    ChunkedDiarization out;
    out.plan = plan_chunks(audio.duration, chunk_length, overlap);
    const std::size_t n = out.plan.windows.size();
    out.per_chunk.resize(n);
    parallel_for(n, max_parallel, [&](std::size_t i) {
        const std::optional<TimeInterval> window =
            n == 1 ? std::nullopt : std::optional<TimeInterval>(out.plan.windows[i]);
        out.per_chunk[i] = {i, diarizer.diarize(audio, window)};
    });

    if (n > 1) {
        struct Job {
            std::size_t speaker;
            TimeInterval window;
        };
        std::vector<Job> jobs;
        for (const auto& [chunk, segs] : out.per_chunk) {
            for (const auto& s : segs) {
                auto it = std::find_if(out.speakers.begin(), out.speakers.end(), [&](const ChunkSpeaker& c) {
                    return c.chunk_index == chunk && c.local_label == s.label;
                });
                if (it == out.speakers.end()) {
                    out.speakers.push_back({chunk, s.label, std::nullopt, 0.0});
                    it = std::prev(out.speakers.end());
                }
                it->total_duration += s.interval.duration();
                if (s.interval.duration() >= embedder.min_window()) {
                    jobs.push_back({static_cast<std::size_t>(it - out.speakers.begin()), s.interval});
                }
            }
        }
        std::vector<Embedding> vecs(jobs.size());
        parallel_for(jobs.size(), max_parallel,
                     [&](std::size_t j) { vecs[j] = embedder.embed(audio, jobs[j].window); });
        std::vector<std::vector<Embedding>> grouped(out.speakers.size());
        for (std::size_t j = 0; j < jobs.size(); ++j) grouped[jobs[j].speaker].push_back(std::move(vecs[j]));
        for (std::size_t s = 0; s < out.speakers.size(); ++s) {
            if (!grouped[s].empty()) out.speakers[s].mean_embedding = mean_embedding(grouped[s]);
        }
        out.mapping = unify_labels(out.speakers, cluster_threshold);
    } else {
        for (const auto& s : out.per_chunk.front().second) out.mapping[{0, s.label}] = s.label;
    }
    out.segments = stitch(out.per_chunk, out.mapping, out.plan);
    return out;
}

}  // namespace sdpost
