#pragma once

// Independent reference implementations used only by the tests. None of these
// share code paths with the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sdpost/core.hpp"
#include "sdpost/metrics.hpp"

namespace oracle {

// Plain recursion over the three edit operations. Exponential; keep inputs
// short (<= 8 symbols).
template <typename Seq>
std::size_t recursive_edit_distance(const Seq& a, const Seq& b, std::size_t i = 0, std::size_t j = 0) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    if (a[i] == b[j]) return recursive_edit_distance(a, b, i + 1, j + 1);
    return 1 + std::min({recursive_edit_distance(a, b, i + 1, j), recursive_edit_distance(a, b, i, j + 1),
                         recursive_edit_distance(a, b, i + 1, j + 1)});
}

// Memoized variant for longer inputs.
template <typename Seq>
std::size_t memo_edit_distance(const Seq& a, const Seq& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t r = a[i] == b[j] ? go(i + 1, j + 1)
                                     : 1 + std::min({go(i + 1, j), go(i, j + 1), go(i + 1, j + 1)});
        memo[key] = r;
        return r;
    };
    return go(0, 0);
}

// Best total weight over every injective partial assignment rows -> cols,
// by exhaustive enumeration.
inline double brute_force_assignment(const std::vector<std::vector<double>>& w) {
    const std::size_t rows = w.size();
    const std::size_t cols = rows ? w[0].size() : 0;
    std::vector<bool> used(cols, false);
    std::function<double(std::size_t)> go = [&](std::size_t r) -> double {
        if (r == rows) return 0.0;
        double best = go(r + 1);  // row left unassigned
        for (std::size_t c = 0; c < cols; ++c) {
            if (used[c]) continue;
            used[c] = true;
            best = std::max(best, w[r][c] + go(r + 1));
            used[c] = false;
        }
        return best;
    };
    return go(0);
}

// ─── Frame-level DER ────────────────────────────────────────────────────────

struct FrameDer {
    double der = 0.0, false_alarm = 0.0, confusion = 0.0, missed = 0.0;
    long total_frames = 0;
};

inline long to_frames(double t) { return std::lround(t * 100.0); }

// 10 ms frame scorer. All boundaries and the collar must lie on the 10 ms grid.
// The speaker mapping is found by enumerating every injective assignment.
inline FrameDer frame_der(const sdpost::Annotation& ref, const sdpost::Annotation& hyp, double collar) {
    std::vector<std::string> rl = ref.labels(), hl = hyp.labels();
    long lo = 0, hi = 0;
    for (const auto* a : {&ref, &hyp})
        for (const auto& s : a->segments) hi = std::max(hi, to_frames(s.interval.end));
    const long c = to_frames(collar);
    std::vector<long> bounds;
    for (const auto& s : ref.segments) {
        bounds.push_back(to_frames(s.interval.start));
        bounds.push_back(to_frames(s.interval.end));
    }
    auto active = [](const sdpost::Annotation& a, const std::string& label, long f) {
        for (const auto& s : a.segments)
            if (s.label == label && to_frames(s.interval.start) <= f && f + 1 <= to_frames(s.interval.end)) return true;
        return false;
    };

    struct Frame {
        std::vector<int> r, h;
    };
    std::vector<Frame> frames;
    for (long f = lo; f < hi; ++f) {
        bool excluded = false;
        if (c > 0)
            for (long b : bounds)
                if (b - c <= f && f + 1 <= b + c) excluded = true;
        if (excluded) continue;
        Frame fr;
        for (int i = 0; i < static_cast<int>(rl.size()); ++i)
            if (active(ref, rl[i], f)) fr.r.push_back(i);
        for (int i = 0; i < static_cast<int>(hl.size()); ++i)
            if (active(hyp, hl[i], f)) fr.h.push_back(i);
        frames.push_back(std::move(fr));
    }

    // co-occurrence in frames, then exhaustive mapping search on integers
    std::vector<std::vector<long>> co(hl.size(), std::vector<long>(rl.size(), 0));
    for (const auto& fr : frames)
        for (int h : fr.h)
            for (int r : fr.r) ++co[h][r];
    std::vector<int> assign(hl.size(), -1), best_assign = assign;
    std::vector<bool> used(rl.size(), false);
    long best = -1;
    std::function<void(std::size_t, long)> go = [&](std::size_t h, long acc) {
        if (h == hl.size()) {
            if (acc > best) {
                best = acc;
                best_assign = assign;
            }
            return;
        }
        assign[h] = -1;
        go(h + 1, acc);
        for (std::size_t r = 0; r < rl.size(); ++r) {
            if (used[r]) continue;
            used[r] = true;
            assign[h] = static_cast<int>(r);
            go(h + 1, acc + co[h][r]);
            used[r] = false;
        }
        assign[h] = -1;
    };
    go(0, 0);

    long miss = 0, fa = 0, conf = 0, total = 0;
    for (const auto& fr : frames) {
        const long nr = static_cast<long>(fr.r.size()), nh = static_cast<long>(fr.h.size());
        long correct = 0;
        for (int h : fr.h)
            if (best_assign[h] >= 0 && std::find(fr.r.begin(), fr.r.end(), best_assign[h]) != fr.r.end()) ++correct;
        total += nr;
        miss += std::max(0L, nr - nh);
        fa += std::max(0L, nh - nr);
        conf += std::min(nr, nh) - correct;
    }
    FrameDer out;
    out.total_frames = total;
    if (total > 0) {
        out.missed = static_cast<double>(miss) / static_cast<double>(total);
        out.false_alarm = static_cast<double>(fa) / static_cast<double>(total);
        out.confusion = static_cast<double>(conf) / static_cast<double>(total);
        out.der = static_cast<double>(miss + fa + conf) / static_cast<double>(total);
    }
    return out;
}

// Random annotation on the 10 ms grid: up to `max_speakers` labels, times in
// [0, max_seconds].
inline sdpost::Annotation random_annotation(std::mt19937_64& rng, int max_speakers, double max_seconds,
                                            const std::string& prefix, int max_segments = 8) {
    sdpost::Annotation a;
    const int speakers = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_speakers));
    const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_segments));
    const long horizon = to_frames(max_seconds);
    for (int i = 0; i < n; ++i) {
        long s = static_cast<long>(rng() % static_cast<unsigned long>(horizon));
        long len = 1 + static_cast<long>(rng() % 1500);
        long e = std::min(horizon, s + len);
        if (e <= s) continue;
        a.add(static_cast<double>(s) / 100.0, static_cast<double>(e) / 100.0,
              prefix + std::to_string(rng() % static_cast<unsigned>(speakers)));
    }
    return a;
}

// Full pairwise scan: rows sorted by (score desc, row asc), first k kept.
inline std::vector<std::size_t> brute_force_top_k(const std::vector<std::vector<float>>& rows,
                                                  const std::vector<float>& query, std::size_t k,
                                                  std::size_t exclude) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r == exclude) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) s += static_cast<double>(query[i]) * rows[r][i];
        scored.emplace_back(s, r);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

}  // namespace oracle
