#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sdpost/reverify.hpp"

using namespace sdpost;

namespace {

std::vector<std::vector<float>> random_unit_rows(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<std::vector<float>> rows(n, std::vector<float>(dim));
    for (auto& r : rows) {
        double s = 0.0;
        for (auto& x : r) {
            x = g(rng);
            s += static_cast<double>(x) * x;
        }
        for (auto& x : r) x = static_cast<float>(x / std::sqrt(s));
    }
    return rows;
}

DiarSegment seg(const std::string& label) {
    DiarSegment d;
    d.label = SpeakerLabel{label};
    return d;
}

Embedding axis(std::size_t dim, std::size_t i, float wobble = 0.0f) {
    Embedding e;
    e.vector.assign(dim, 0.0f);
    e.vector[i] = 1.0f;
    e.vector[(i + 1) % dim] = wobble;
    return e;
}

}  // namespace

TEST(SimilarityIndex, RejectsMixedDimensionsAndEmpty) {
    EXPECT_THROW(SimilarityIndex(std::vector<Embedding>{}), InvalidArgument);
    EXPECT_THROW(SimilarityIndex({Embedding{{1, 0}}, Embedding{{1, 0, 0}}}), DimensionMismatch);
}

TEST(SimilarityIndex, MatchesBruteForceTopK) {
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 40; ++iter) {
        const std::size_t n = 2 + rng() % 60, dim = 1 + rng() % 32, k = 1 + rng() % 12;
        const auto rows = random_unit_rows(rng, n, dim);
        std::vector<Embedding> es;
        for (const auto& r : rows) es.push_back(Embedding{r});
        const SimilarityIndex idx(es);
        for (std::size_t q = 0; q < n; ++q) {
            const auto got = idx.search(idx.vector(q), k, q);
            const auto want = oracle::brute_force_top_k(
                [&] {
                    std::vector<std::vector<float>> stored;
                    for (std::size_t r = 0; r < n; ++r) stored.emplace_back(idx.vector(r).begin(), idx.vector(r).end());
                    return stored;
                }(),
                std::vector<float>(idx.vector(q).begin(), idx.vector(q).end()), k, q);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].row, want[i]);
        }
    }
}

TEST(SimilarityIndex, ExactTiesBrokenByRow) {
    const SimilarityIndex idx({Embedding{{1, 0}}, Embedding{{1, 0}}, Embedding{{1, 0}}, Embedding{{0, 1}}});
    const auto n = idx.search(idx.vector(3), 3);
    ASSERT_EQ(n.size(), 3u);
    EXPECT_EQ(n[0].row, 3u);
    EXPECT_EQ(n[1].row, 0u);
    EXPECT_EQ(n[2].row, 1u);
}

TEST(Plurality, OriginalWinsTies) {
    const SpeakerLabel a{"spk0"}, b{"spk1"};
    EXPECT_EQ(plurality_label({a, b}, {0.1, 0.9}, a), a);
    EXPECT_EQ(plurality_label({a, b, b}, {0.9, 0.1, 0.1}, a), b);
}

TEST(Plurality, TieWithoutOriginalGoesToHigherSimilarity) {
    const SpeakerLabel a{"spk0"}, b{"spk1"}, c{"spk2"};
    EXPECT_EQ(plurality_label({a, b}, {0.2, 0.9}, c), b);
    EXPECT_EQ(plurality_label({a, b}, {0.5, 0.5}, c), a);  // then smallest label
}

TEST(Reverify, OutlierSegmentFlagged) {
    // five spk0 segments near axis 0, four spk1 near axis 1; segment 9 carries
    // spk1 but sounds like spk0.
    std::vector<DiarSegment> segs;
    std::vector<std::optional<Embedding>> emb;
    for (int i = 0; i < 5; ++i) {
        segs.push_back(seg("spk0"));
        emb.push_back(axis(4, 0, 0.01f * static_cast<float>(i)));
    }
    for (int i = 0; i < 4; ++i) {
        segs.push_back(seg("spk1"));
        emb.push_back(axis(4, 1, 0.01f * static_cast<float>(i)));
    }
    segs.push_back(seg("spk1"));
    emb.push_back(axis(4, 0, 0.02f));
    const auto r = reverify_segments(segs, emb, 3);
    ASSERT_EQ(r.size(), segs.size());
    EXPECT_TRUE(r[9].low_confidence);
    EXPECT_EQ(r[9].reverified.value, "spk0");
    for (std::size_t i = 0; i < 9; ++i) EXPECT_FALSE(r[i].low_confidence) << i;
    for (const auto& x : r)
        for (auto id : x.neighbor_ids) EXPECT_NE(id, x.segment_id);
}

TEST(Reverify, UnknownExcludedFromPoolButAlwaysFlagged) {
    std::vector<DiarSegment> segs{seg("spk0"), seg("spk0"), seg(kUnknown), seg("spk1")};
    std::vector<std::optional<Embedding>> emb{axis(3, 0), axis(3, 0, 0.1f), axis(3, 0, 0.05f), axis(3, 2)};
    const auto r = reverify_segments(segs, emb, 10);
    for (std::size_t i = 0; i < r.size(); ++i)
        for (auto id : r[i].neighbor_ids) EXPECT_NE(id, 2u);
    EXPECT_TRUE(r[2].low_confidence);
    EXPECT_EQ(r[2].reverified.value, "spk0");
    EXPECT_EQ(r[2].neighbor_ids.size(), 3u);
}

TEST(Reverify, ShortSegmentsKeepLabel) {
    std::vector<DiarSegment> segs{seg("spk0"), seg("spk1"), seg("spk1")};
    std::vector<std::optional<Embedding>> emb{std::nullopt, axis(2, 0), axis(2, 0)};
    const auto r = reverify_segments(segs, emb, 10);
    EXPECT_EQ(r[0].reverified.value, "spk0");
    EXPECT_FALSE(r[0].low_confidence);
    EXPECT_TRUE(r[0].neighbor_ids.empty());
}

TEST(Reverify, SingleSegmentKeepsLabel) {
    const auto r = reverify_segments({seg("spk0")}, {axis(2, 0)}, 10);
    EXPECT_EQ(r[0].reverified.value, "spk0");
    EXPECT_FALSE(r[0].low_confidence);
}

TEST(Reverify, ArgumentChecks) {
    EXPECT_THROW(reverify_segments({seg("a")}, {}, 10), InvalidArgument);
    EXPECT_THROW(reverify_segments({seg("a")}, {axis(2, 0)}, 0), InvalidArgument);
}
