// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 = all passed).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "sdpost/mock_scenarios.hpp"
#include "sdpost/sdpost.hpp"

using namespace sdpost;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// ─── Refinement truth table ─────────────────────────────────────────────────

Outcome refine_truth_table() {
    const auto t0 = Clock::now();
    IdentityMap distinct, merged;
    distinct.set(SpeakerLabel{"spk0"}, Identity{"P"});
    distinct.set(SpeakerLabel{"spk1"}, Identity{"C"});
    distinct.set(SpeakerLabel{"spk2"}, Identity{"S"});
    merged.set(SpeakerLabel{"spk0"}, Identity{"P"});
    merged.set(SpeakerLabel{"spk1"}, Identity{"P"});
    merged.set(SpeakerLabel{"spk2"}, Identity{"S"});

    // LLM cells: absent, confident spk0/spk1/spk2, confident Unknown, unconfident spk1
    const std::vector<std::optional<std::pair<std::string, double>>> llm_cells{
        std::nullopt,
        std::make_pair("spk0", 0.95),
        std::make_pair("spk1", 0.95),
        std::make_pair("spk2", 0.95),
        std::make_pair(std::string(kUnknown), 0.95),
        std::make_pair("spk1", 0.50)};

    struct Row {
        const char* original;
        const char* reverified;
        int llm;     // index into llm_cells
        int map;     // 0 distinct, 1 merged
        const char* identity;
        Provenance provenance;
    };
    using P = Provenance;
    const char* U = kUnknown;
    // Hand-derived from the decision tree.
    const std::vector<Row> table{
        // original Unknown: reverified label irrelevant
        {U, U, 0, 0, U, P::UnknownRetained}, {U, U, 0, 1, U, P::UnknownRetained},
        {U, U, 1, 0, "P", P::LlmAssigned}, {U, U, 1, 1, "P", P::LlmAssigned},
        {U, U, 2, 0, "C", P::LlmAssigned}, {U, U, 2, 1, "P", P::LlmAssigned},
        {U, U, 3, 0, "S", P::LlmAssigned}, {U, U, 3, 1, "S", P::LlmAssigned},
        {U, U, 4, 0, U, P::UnknownRetained}, {U, U, 4, 1, U, P::UnknownRetained},
        {U, U, 5, 0, U, P::UnknownRetained}, {U, U, 5, 1, U, P::UnknownRetained},
        {U, "spk1", 0, 0, U, P::UnknownRetained}, {U, "spk1", 0, 1, U, P::UnknownRetained},
        {U, "spk1", 1, 0, "P", P::LlmAssigned}, {U, "spk1", 1, 1, "P", P::LlmAssigned},
        {U, "spk1", 2, 0, "C", P::LlmAssigned}, {U, "spk1", 2, 1, "P", P::LlmAssigned},
        {U, "spk1", 3, 0, "S", P::LlmAssigned}, {U, "spk1", 3, 1, "S", P::LlmAssigned},
        {U, "spk1", 4, 0, U, P::UnknownRetained}, {U, "spk1", 4, 1, U, P::UnknownRetained},
        {U, "spk1", 5, 0, U, P::UnknownRetained}, {U, "spk1", 5, 1, U, P::UnknownRetained},
        // original agrees with re-verification
        {"spk0", "spk0", 0, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 0, 1, "P", P::OriginalAgreed},
        {"spk0", "spk0", 1, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 1, 1, "P", P::OriginalAgreed},
        {"spk0", "spk0", 2, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 2, 1, "P", P::OriginalAgreed},
        {"spk0", "spk0", 3, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 3, 1, "P", P::OriginalAgreed},
        {"spk0", "spk0", 4, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 4, 1, "P", P::OriginalAgreed},
        {"spk0", "spk0", 5, 0, "P", P::OriginalAgreed}, {"spk0", "spk0", 5, 1, "P", P::OriginalAgreed},
        // original disagrees with re-verification
        {"spk0", "spk1", 0, 0, "P", P::OriginalAgreed}, {"spk0", "spk1", 0, 1, "P", P::OriginalAgreed},
        {"spk0", "spk1", 1, 0, "P", P::MajorityVote}, {"spk0", "spk1", 1, 1, "P", P::MajorityVote},
        {"spk0", "spk1", 2, 0, "C", P::MajorityVote}, {"spk0", "spk1", 2, 1, "P", P::MajorityVote},
        {"spk0", "spk1", 3, 0, "P", P::MajorityVote}, {"spk0", "spk1", 3, 1, "P", P::MajorityVote},
        {"spk0", "spk1", 4, 0, "P", P::MajorityVote}, {"spk0", "spk1", 4, 1, "P", P::MajorityVote},
        {"spk0", "spk1", 5, 0, "P", P::OriginalAgreed}, {"spk0", "spk1", 5, 1, "P", P::OriginalAgreed},
    };

    int mismatches = 0;
    for (const auto& row : table) {
        AdjudicationRecord rec{0, SpeakerLabel{row.original}, SpeakerLabel{row.reverified}, std::nullopt};
        if (const auto& cell = llm_cells[static_cast<std::size_t>(row.llm)]) {
            LlmLabelResult l;
            l.llm_label = SpeakerLabel{cell->first};
            l.confidence = cell->second;
            rec.llm = l;
        }
        const auto d = decide_identity(rec, row.map == 0 ? distinct : merged, 0.9);
        if (d.identity.value != row.identity || d.provenance != row.provenance) ++mismatches;
    }
    const double dt = seconds_since(t0);
    return {mismatches == 0 && dt < 1.0,
            fmt("%.0f cells, %.0f mismatches, %.3f s (limit 1 s)", static_cast<double>(table.size()), mismatches, dt)};
}

// ─── DER ────────────────────────────────────────────────────────────────────

Outcome der_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    int compared = 0, bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto ref = oracle::random_annotation(rng, 5, 60, "r", 12);
        const auto hyp = oracle::random_annotation(rng, 5, 60, "h", 12);
        for (double collar : {0.0, 0.25}) {
            const auto o = oracle::frame_der(ref, hyp, collar);
            if (o.total_frames == 0) {
                try {
                    der(ref, hyp, collar);
                    ++bad;
                } catch (const EmptyReference&) {
                }
                continue;
            }
            const auto r = der(ref, hyp, collar);
            for (double d : {r.der - o.der, r.missed - o.missed, r.false_alarm - o.false_alarm,
                             r.confusion - o.confusion})
                worst = std::max(worst, std::abs(d));
            ++compared;
        }
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-6 && bad == 0 && dt < 30.0,
            fmt("%.0f comparisons, max |diff| %.2e, %.1f s (limit 30 s)", compared, worst, dt)};
}

Outcome der_rename_invariance() {
    std::mt19937_64 rng(99);
    int violations = 0;
    for (int i = 0; i < 100; ++i) {
        const auto ref = oracle::random_annotation(rng, 5, 60, "r", 12);
        const auto hyp = oracle::random_annotation(rng, 5, 60, "h", 12);
        // random bijection onto fresh names
        auto labels = hyp.labels();
        std::vector<std::string> names;
        for (std::size_t k = 0; k < labels.size(); ++k) names.push_back("z" + std::to_string(rng() % 1000) + "_" + std::to_string(k));
        std::shuffle(names.begin(), names.end(), rng);
        std::map<std::string, std::string> rename;
        for (std::size_t k = 0; k < labels.size(); ++k) rename[labels[k]] = names[k];
        Annotation renamed;
        for (const auto& s : hyp.segments) renamed.add(s.interval.start, s.interval.end, rename.at(s.label));

        for (double collar : {0.0, 0.25}) {
            DerReport a, b;
            try {
                a = der(ref, hyp, collar);
            } catch (const EmptyReference&) {
                continue;
            }
            b = der(ref, renamed, collar);
            bool same = a.der == b.der && a.missed == b.missed && a.false_alarm == b.false_alarm &&
                        a.confusion == b.confusion && a.total_reference == b.total_reference &&
                        a.mapping.size() == b.mapping.size();
            for (const auto& [h, r] : a.mapping) same = same && b.mapping.count(rename.at(h)) && b.mapping.at(rename.at(h)) == r;
            if (!same) ++violations;
        }
    }
    return {violations == 0, fmt("100 cases x 2 collars, %.0f violations", violations)};
}

Outcome table_arithmetic() {
    struct PaperRow {
        const char* name;
        double der, fa, conf, miss;
    };
    const std::vector<PaperRow> rows{
        {"T1 SD Sortformer", 21.06, 4.21, 7.86, 8.99}, {"T1 SD Pyannote", 22.72, 6.02, 9.23, 7.47},
        {"T1 SD+ASR", 23.05, 6.25, 9.60, 7.20},        {"T1 Proposed Qwen", 17.72, 4.16, 4.28, 9.28},
        {"T1 Proposed GPT", 16.19, 4.12, 2.84, 9.23},  {"T1 AWS", 29.29, 8.44, 11.34, 9.50},
        {"T2 SD", 21.06, 4.21, 7.86, 8.99},            {"T2 Re-verification", 21.51, 4.21, 8.30, 8.99},
        {"T2 Re-run ASR", 21.63, 4.54, 8.24, 8.84},    {"T2 GPT-full", 21.75, 4.50, 8.47, 8.77},
        {"T2 GPT-ref", 21.29, 4.35, 7.93, 9.01},       {"T2 GPT-identity", 16.61, 4.59, 3.32, 8.70},
        {"T2 GPT-ref+identity", 16.42, 4.35, 3.06, 9.01}, {"T2 Proposed GPT", 16.19, 4.12, 2.84, 9.23},
        {"T3 SD Sortformer", 26.92, 2.98, 4.51, 19.43}, {"T3 SD+ASR Sortformer", 28.59, 4.66, 6.30, 17.63},
        {"T3 Qwen Sortformer", 29.52, 1.76, 8.42, 19.34}, {"T3 GPT Sortformer", 25.34, 1.92, 4.57, 18.85},
        {"T3 SD Pyannote", 18.23, 2.56, 6.21, 9.46},   {"T3 SD+ASR Pyannote", 18.89, 3.23, 6.48, 9.19},
        {"T3 Qwen Pyannote", 23.12, 2.36, 9.86, 10.90}, {"T3 GPT Pyannote", 18.42, 2.46, 5.74, 10.22},
    };
    // Each printed value is rounded to 0.01 pp, so the printed total and the sum
    // of three printed parts can differ by at most 4 * 0.005 pp.
    const double rounding = 0.02 + 1e-9;
    int bad = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        // A 100 s reference realizing the row's components; the scorer must
        // return them and their total.
        Annotation ref, hyp;
        ref.add(0, 100, "A");
        const double correct_end = 100.0 - r.miss - r.conf;
        hyp.add(0, correct_end, "x");
        hyp.add(correct_end, 100.0 - r.miss, "y");
        hyp.add(100.0, 100.0 + r.fa, "z");
        const auto rep = der(ref, hyp, 0.0);
        const bool components = std::abs(100 * rep.missed - r.miss) < 1e-9 &&
                                std::abs(100 * rep.confusion - r.conf) < 1e-9 &&
                                std::abs(100 * rep.false_alarm - r.fa) < 1e-9;
        const double diff = std::abs(100 * rep.der - r.der);
        worst = std::max(worst, diff);
        if (!components || diff > rounding) ++bad;
    }
    const double rr = relative_reduction(0.2305, 0.1619);
    const bool headline = std::abs(100 * rr - 29.7) <= 0.1;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu rows, %d off, max |sum-DER| %.3f pp; reduction %.2f%% (29.7 +/- 0.1)",
                  rows.size(), bad, worst, 100 * rr);
    return {bad == 0 && headline, buf};
}

// ─── Levenshtein ────────────────────────────────────────────────────────────

Outcome levenshtein_oracle() {
    const auto t0 = Clock::now();
    constexpr int kMaxLen = 8;
    std::vector<std::size_t> offset(kMaxLen + 2, 0), pow3(kMaxLen + 1, 1);
    for (int l = 1; l <= kMaxLen; ++l) pow3[static_cast<std::size_t>(l)] = pow3[static_cast<std::size_t>(l - 1)] * 3;
    for (int l = 0; l <= kMaxLen; ++l)
        offset[static_cast<std::size_t>(l + 1)] = offset[static_cast<std::size_t>(l)] + pow3[static_cast<std::size_t>(l)];
    const std::size_t n = offset[kMaxLen + 1];

    std::vector<std::string> str(n);
    std::vector<std::size_t> len(n), tail(n);
    std::vector<char> head(n);
    for (int l = 0; l <= kMaxLen; ++l) {
        for (std::size_t v = 0; v < pow3[static_cast<std::size_t>(l)]; ++v) {
            const std::size_t id = offset[static_cast<std::size_t>(l)] + v;
            std::string s(static_cast<std::size_t>(l), 'a');
            std::size_t x = v;
            for (int i = l - 1; i >= 0; --i) {
                s[static_cast<std::size_t>(i)] = static_cast<char>('a' + x % 3);
                x /= 3;
            }
            str[id] = s;
            len[id] = static_cast<std::size_t>(l);
            if (l > 0) {
                head[id] = s[0];
                tail[id] = offset[static_cast<std::size_t>(l - 1)] + v % pow3[static_cast<std::size_t>(l - 1)];
            }
        }
    }

    // The three-way recursion on (first symbol, rest), memoized over every
    // pair of suffixes; ids are ordered by length so dependencies come first.
    std::vector<std::uint8_t> d(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            std::uint8_t r;
            if (len[a] == 0) r = static_cast<std::uint8_t>(len[b]);
            else if (len[b] == 0) r = static_cast<std::uint8_t>(len[a]);
            else if (head[a] == head[b]) r = d[tail[a] * n + tail[b]];
            else
                r = static_cast<std::uint8_t>(
                    1 + std::min({d[tail[a] * n + b], d[a * n + tail[b]], d[tail[a] * n + tail[b]]}));
            d[a * n + b] = r;
        }
    }
    // spot-check the memo table against the plain recursion
    std::mt19937_64 rng(8);
    std::size_t recursion_mismatch = 0;
    for (int i = 0; i < 2000; ++i) {
        const std::size_t a = rng() % n, b = rng() % n;
        if (oracle::recursive_edit_distance(str[a], str[b]) != d[a * n + b]) ++recursion_mismatch;
    }

    std::size_t mismatches = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t longest = std::max(len[a], len[b]);
            const double want =
                longest == 0 ? 1.0 : 1.0 - static_cast<double>(d[a * n + b]) / static_cast<double>(longest);
            if (levenshtein_similarity(str[a], str[b]) != want) ++mismatches;
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu strings, %zu pairs, %zu mismatches, %zu of 2000 recursion spot-checks off, %.1f s", n,
                  n * n, mismatches, recursion_mismatch, seconds_since(t0));
    return {mismatches == 0 && recursion_mismatch == 0, buf};
}

// ─── k-NN ───────────────────────────────────────────────────────────────────

Outcome knn_exactness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(31337);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::size_t queries = 0, bad = 0;
    for (int set = 0; set < 500; ++set) {
        const std::size_t n = 2 + rng() % 199, dim = 192, k = 10;
        std::vector<DiarSegment> segs(n);
        std::vector<std::optional<Embedding>> emb(n);
        std::vector<std::vector<float>> unit(n);
        for (std::size_t i = 0; i < n; ++i) {
            segs[i].label = SpeakerLabel{"spk" + std::to_string(rng() % 4)};
            Embedding e;
            if (i > 0 && rng() % 10 == 0) {
                e = *emb[rng() % i];  // exact duplicates exercise tie ordering
            } else {
                for (std::size_t j = 0; j < dim; ++j) e.vector.push_back(g(rng));
            }
            emb[i] = e;
            unit[i] = e.normalized().vector;
        }
        const auto results = reverify_segments(segs, emb, k);
        for (std::size_t q = 0; q < n; ++q) {
            ++queries;
            if (results[q].neighbor_ids != oracle::brute_force_top_k(unit, unit[q], k, q)) ++bad;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "500 sets, %zu queries, %zu mismatches, %.1f s", queries, bad, seconds_since(t0));
    return {bad == 0, buf};
}

// ─── End to end ─────────────────────────────────────────────────────────────

std::set<std::string> scripted_identities(const mock::Script& s) {
    std::set<std::string> out;
    for (const auto& t : s.turns)
        if (t.in_reference) out.insert(t.identity);
    return out;
}

Outcome scenario_a() {
    const auto t0 = Clock::now();
    const auto s = mock::clean_scenario();
    const auto r = run_pipeline(mock::audio_ref(s), mock::make_backends(s), {});
    const auto rep = der(mock::reference_annotation(s), to_annotation(r.segments), 0.25);
    std::set<std::string> ids;
    bool turnwise = true;
    for (const auto& f : r.segments) {
        ids.insert(f.identity.value);
        const auto t = mock::dominant_turn(s, f.interval);
        turnwise = turnwise && t && s.turns[*t].identity == f.identity.value;
    }
    const double dt = seconds_since(t0);
    return {rep.der == 0.0 && ids == scripted_identities(s) && turnwise && dt < 10.0,
            fmt(ids == scripted_identities(s) ? "DER %.4f, identities match, %.2f s (limit 10 s)"
                                              : "DER %.4f, identities differ, %.2f s (limit 10 s)",
                rep.der, dt)};
}

Outcome scenario_b() {
    const auto t0 = Clock::now();
    const auto s = mock::split_speaker_scenario();
    const auto r = run_pipeline(mock::audio_ref(s), mock::make_backends(s), {});
    const auto ref = mock::reference_annotation(s);
    const auto base = der(ref, to_annotation(r.reconciled), 0.25);
    const auto fin = der(ref, to_annotation(r.segments), 0.25);
    std::set<std::string> final_ids;
    for (const auto& f : r.segments)
        if (!f.identity.is_unknown()) final_ids.insert(f.identity.value);
    const bool count_ok = final_ids.size() == scripted_identities(s).size() &&
                          r.identity_map.distinct_identities().size() == scripted_identities(s).size();
    const double dt = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf, "confusion %.4f vs baseline %.4f, identities %zu/%zu, %.2f s (limit 10 s)",
                  fin.confusion, base.confusion, final_ids.size(), scripted_identities(s).size(), dt);
    return {fin.confusion < base.confusion && count_ok && dt < 10.0, buf};
}

Outcome chunk_sweep() {
    const auto s = mock::drift_scenario();
    std::vector<SweepItem> items{{mock::audio_ref(s), mock::make_backends(s), mock::reference_annotation(s)}};
    const auto rows = sweep_chunks(items, {90, 250}, {});
    return {rows.size() == 2 && rows[1].report.der <= rows[0].report.der,
            fmt("DER(250) %.4f <= DER(90) %.4f", rows[1].report.der, rows[0].report.der)};
}

Outcome dedup_and_partition() {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> u(0.0, 40.0);
    const std::vector<std::string> vocab{"yes", "no", "pain", "knee", "ok"};
    std::size_t idem_bad = 0, part_bad = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        // align: every word lands in exactly one output segment
        std::vector<DiarSegment> sd;
        for (int i = 0, m = static_cast<int>(rng() % 8); i < m; ++i) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            DiarSegment d;
            d.interval = {a, b};
            d.label = SpeakerLabel{"spk" + std::to_string(rng() % 3)};
            sd.push_back(d);
        }
        std::vector<Word> words;
        for (int i = 0, m = static_cast<int>(rng() % 40); i < m; ++i) {
            const double st = std::round(u(rng) * 100) / 100;
            words.push_back({vocab[rng() % vocab.size()] + std::to_string(i), {st, st + 0.2}, WordSource::InitialPass});
        }
        sort_words(words);
        const auto aligned = align(sd, words, 1.0);
        std::map<std::string, int> owners;
        for (const auto& s : aligned.segments) {
            for (const auto& w : s.words) {
                ++owners[w.text];
                const bool inside = std::any_of(sd.begin(), sd.end(), [&](const DiarSegment& x) { return word_in_segment(w, x); });
                if (s.origin == SegmentOrigin::Diarizer ? !word_in_segment(w, s) : inside) ++part_bad;
            }
        }
        for (const auto& w : words)
            if (owners[w.text] != 1) ++part_bad;
        if (owners.size() != words.size()) ++part_bad;

        // clean_duplicates: a second pass removes nothing
        std::vector<FinalSegment> fs;
        for (int i = 0, m = static_cast<int>(rng() % 10); i < m; ++i) {
            FinalSegment f;
            const double st = static_cast<double>(rng() % 20);
            f.interval = {st, st + 1.0 + static_cast<double>(rng() % 4)};
            f.identity = Identity{rng() % 2 ? "Patient" : "Nurse"};
            for (int w = 0, k = static_cast<int>(rng() % 4); w < k; ++w)
                f.words.push_back({vocab[rng() % 3], {st + 0.1 * w, st + 0.1 * w + 0.05}, WordSource::InitialPass});
            fs.push_back(f);
        }
        std::stable_sort(fs.begin(), fs.end(), [](const auto& a, const auto& b) { return a.interval.start < b.interval.start; });
        const auto once = clean_duplicates(fs);
        std::vector<std::size_t> removed;
        const auto twice = clean_duplicates(once, &removed);
        if (!removed.empty() || twice.size() != once.size()) ++idem_bad;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "1000 fixtures, %zu partition violations, %zu idempotence violations", part_bad,
                  idem_bad);
    return {part_bad == 0 && idem_bad == 0, buf};
}

Outcome determinism() {
    const auto s = mock::messy_scenario();
    PipelineConfig one, many;
    one.max_parallel = 1;
    many.max_parallel = 8;
    const auto a = output_json(s.recording_id, run_pipeline(mock::audio_ref(s), mock::make_backends(s), many), many).dump(2);
    const auto b = output_json(s.recording_id, run_pipeline(mock::audio_ref(s), mock::make_backends(s), many), many).dump(2);
    const auto c = output_json(s.recording_id, run_pipeline(mock::audio_ref(s), mock::make_backends(s), one), many).dump(2);
    const bool same = a == b && a == c;
    return {same, fmt(same ? "%.0f-byte JSON identical across runs and parallelism"
                           : "%.0f-byte JSON differs between runs",
                      static_cast<double>(a.size()))};
}

}  // namespace

int main() {
    report("refine-truth-table", refine_truth_table);
    report("der-oracle-equivalence", der_oracle);
    report("der-rename-invariance", der_rename_invariance);
    report("table-arithmetic", table_arithmetic);
    report("levenshtein-oracle", levenshtein_oracle);
    report("knn-exactness", knn_exactness);
    report("scenario-a-clean", scenario_a);
    report("scenario-b-split-speaker", scenario_b);
    report("chunk-sweep", chunk_sweep);
    report("dedup-idempotence+partition", dedup_and_partition);
    report("determinism", determinism);
    std::printf("%d criteria failed\n", failures);
    return failures;
}
