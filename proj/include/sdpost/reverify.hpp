#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sdpost/core.hpp"

namespace sdpost {

struct Neighbor {
    std::size_t row = 0;
    double score = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Higher score first; equal scores by ascending row.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.row < b.row;
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

// Exact (brute-force) inner-product index over L2-normalized vectors, so
// scores are cosine similarities.
class SimilarityIndex {
public:
    SimilarityIndex() = default;

    explicit SimilarityIndex(const std::vector<Embedding>& embeddings) {
        if (embeddings.empty()) throw InvalidArgument("cannot index an empty embedding set");
        dim_ = embeddings.front().dim();
        if (dim_ == 0) throw InvalidArgument("zero-dimensional embedding");
        data_.reserve(embeddings.size() * dim_);
        for (const auto& e : embeddings) {
            if (e.dim() != dim_) {
                throw DimensionMismatch("embedding dim " + std::to_string(e.dim()) + " != " +
                                        std::to_string(dim_));
            }
            const auto n = e.normalized();
            data_.insert(data_.end(), n.vector.begin(), n.vector.end());
        }
    }

    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const { return dim_; }

    std::span<const float> vector(std::size_t row) const {
        return {data_.data() + row * dim_, dim_};
    }

    // Top-k rows by inner product with `query` (expected normalized),
    // optionally skipping one row.
    std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                                 std::optional<std::size_t> exclude = std::nullopt) const {
        if (query.size() != dim_) throw DimensionMismatch("query dim mismatch");
        std::vector<Neighbor> all;
        all.reserve(size());
        for (std::size_t r = 0; r < size(); ++r) {
            if (exclude && *exclude == r) continue;
            all.push_back({r, dot(query, vector(r))});
        }
        k = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                          neighbor_before);
        all.resize(k);
        return all;
    }

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

inline SimilarityIndex build_index(const std::vector<Embedding>& embeddings) {
    return SimilarityIndex(embeddings);
}

struct ReverifyResult {
    std::size_t segment_id = 0;
    SpeakerLabel original;
    SpeakerLabel reverified;
    std::vector<SpeakerLabel> neighbor_labels;
    std::vector<std::size_t> neighbor_ids;
    bool low_confidence = false;
};

// Plurality label among neighbors. If the original label is among the tied
// leaders it wins; otherwise the tied label with the largest summed similarity
// (then the smallest label) wins.
inline SpeakerLabel plurality_label(const std::vector<SpeakerLabel>& labels,
                                    const std::vector<double>& scores, const SpeakerLabel& original) {
    if (labels.empty()) return original;
    std::map<SpeakerLabel, std::pair<std::size_t, double>> tally;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& t = tally[labels[i]];
        t.first += 1;
        t.second += scores[i];
    }
    std::size_t best_count = 0;
    for (const auto& [l, t] : tally) best_count = std::max(best_count, t.first);
    if (auto it = tally.find(original); it != tally.end() && it->second.first == best_count) {
        return original;
    }
    const SpeakerLabel* best = nullptr;
    double best_sim = 0.0;
    for (const auto& [l, t] : tally) {
        if (t.first != best_count) continue;
        if (!best || t.second > best_sim) {
            best = &l;
            best_sim = t.second;
        }
    }
    return *best;
}

// Re-verifies the segment stored at `query_row` of the index; `row_labels` and
// `row_ids` describe every indexed row.
inline ReverifyResult reverify_segment(const SimilarityIndex& index,
                                       const std::vector<SpeakerLabel>& row_labels,
                                       const std::vector<std::size_t>& row_ids, std::size_t query_row,
                                       std::size_t k) {
    if (k == 0) throw InvalidArgument("k must be >= 1");
    const auto neighbors = index.search(index.vector(query_row), k, query_row);
    ReverifyResult r;
    r.segment_id = row_ids.at(query_row);
    r.original = row_labels.at(query_row);
    std::vector<double> scores;
    for (const auto& n : neighbors) {
        r.neighbor_labels.push_back(row_labels.at(n.row));
        r.neighbor_ids.push_back(row_ids.at(n.row));
        scores.push_back(n.score);
    }
    r.reverified = plurality_label(r.neighbor_labels, scores, r.original);
    r.low_confidence = r.reverified != r.original;
    return r;
}

// Re-verifies every segment of one recording. Segments without an embedding
// (too short for the extractor) keep their label. Unknown segments are left
// out of the neighbor pool but still queried, and are always low-confidence.
inline std::vector<ReverifyResult> reverify_segments(const std::vector<DiarSegment>& segments,
                                                     const std::vector<std::optional<Embedding>>& embeddings,
                                                     std::size_t k) {
    if (embeddings.size() != segments.size()) throw InvalidArgument("one embedding slot per segment");
    if (k == 0) throw InvalidArgument("k must be >= 1");

    std::vector<Embedding> pool;
    std::vector<SpeakerLabel> pool_labels;
    std::vector<std::size_t> pool_ids;
    std::vector<std::optional<std::size_t>> row_of(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!embeddings[i] || segments[i].label.is_unknown()) continue;
        row_of[i] = pool.size();
        pool.push_back(*embeddings[i]);
        pool_labels.push_back(segments[i].label);
        pool_ids.push_back(i);
    }
    std::optional<SimilarityIndex> index;
    if (!pool.empty()) index.emplace(pool);

    std::vector<ReverifyResult> out;
    out.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& seg = segments[i];
        if (row_of[i]) {
            out.push_back(reverify_segment(*index, pool_labels, pool_ids, *row_of[i], k));
            continue;
        }
        ReverifyResult r;
        r.segment_id = i;
        r.original = seg.label;
        r.reverified = seg.label;
        if (seg.label.is_unknown()) {
            if (embeddings[i] && index) {
                const auto q = embeddings[i]->normalized();
                std::vector<double> scores;
                for (const auto& n : index->search(q.vector, k)) {
                    r.neighbor_labels.push_back(pool_labels[n.row]);
                    r.neighbor_ids.push_back(pool_ids[n.row]);
                    scores.push_back(n.score);
                }
                r.reverified = plurality_label(r.neighbor_labels, scores, seg.label);
            }
            r.low_confidence = true;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace sdpost
