#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdpost/core.hpp"
#include "sdpost/text.hpp"

namespace sdpost {

class EmptyReference : public Error {
public:
    using Error::Error;
};

class DivisionByZero : public Error {
public:
    using Error::Error;
};

// ─── Annotations ────────────────────────────────────────────────────────────

struct LabeledInterval {
    TimeInterval interval;
    std::string label;

    friend bool operator==(const LabeledInterval&, const LabeledInterval&) = default;
};

// Speaker turns of one recording. Turns may overlap (overlapped speech).
struct Annotation {
    std::vector<LabeledInterval> segments;

    void add(double start, double end, std::string label) {
        segments.push_back({{start, end}, std::move(label)});
    }

    std::vector<std::string> labels() const {
        std::set<std::string> s;
        for (const auto& seg : segments) s.insert(seg.label);
        return {s.begin(), s.end()};
    }

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Excluded-from-scoring region. May start before 0.
struct Region {
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const Region&, const Region&) = default;
};

using ScoringMask = std::vector<Region>;

namespace detail {

inline std::vector<Region> merge_regions(std::vector<Region> rs) {
    std::sort(rs.begin(), rs.end(), [](const Region& a, const Region& b) {
        return a.start < b.start || (a.start == b.start && a.end < b.end);
    });
    std::vector<Region> out;
    for (const auto& r : rs) {
        if (!(r.end > r.start)) continue;
        if (!out.empty() && r.start <= out.back().end) {
            out.back().end = std::max(out.back().end, r.end);
        } else {
            out.push_back(r);
        }
    }
    return out;
}

// Removes the (sorted, disjoint) mask from the sorted, disjoint regions.
inline std::vector<Region> subtract(const std::vector<Region>& regions, const ScoringMask& mask) {
    std::vector<Region> out;
    for (const auto& r : regions) {
        double cursor = r.start;
        for (const auto& m : mask) {
            if (m.end <= cursor) continue;
            if (m.start >= r.end) break;
            if (m.start > cursor) out.push_back({cursor, m.start});
            cursor = std::max(cursor, m.end);
            if (cursor >= r.end) break;
        }
        if (cursor < r.end) out.push_back({cursor, r.end});
    }
    return out;
}

// Per-label union of turns, with the mask removed.
inline std::map<std::string, std::vector<Region>> label_support(const Annotation& ann,
                                                                const ScoringMask& mask) {
    std::map<std::string, std::vector<Region>> raw;
    for (const auto& seg : ann.segments) {
        raw[seg.label].push_back({seg.interval.start, seg.interval.end});
    }
    std::map<std::string, std::vector<Region>> out;
    for (auto& [label, rs] : raw) {
        auto support = subtract(merge_regions(std::move(rs)), mask);
        if (!support.empty()) out.emplace(label, std::move(support));
    }
    return out;
}

// Label order that does not depend on label names (first onset, then total
// duration), so that renaming labels cannot change which of several equally
// good assignments is picked.
inline std::vector<std::string> canonical_order(
    const std::map<std::string, std::vector<Region>>& support) {
    struct Key {
        double first;
        double total;
        std::string name;
    };
    std::vector<Key> keys;
    for (const auto& [name, rs] : support) {
        double total = 0.0;
        for (const auto& r : rs) total += r.end - r.start;
        keys.push_back({rs.front().start, total, name});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.first != b.first) return a.first < b.first;
        if (a.total != b.total) return a.total > b.total;
        return a.name < b.name;
    });
    std::vector<std::string> out;
    for (auto& k : keys) out.push_back(std::move(k.name));
    return out;
}

// One maximal stretch of time over which the active speaker sets are fixed.
struct Elementary {
    double duration;
    std::vector<std::size_t> ref_active;
    std::vector<std::size_t> hyp_active;
};

inline std::vector<Elementary> sweep(const std::vector<std::vector<Region>>& ref,
                                     const std::vector<std::vector<Region>>& hyp) {
    struct Event {
        double t;
        int delta;
        bool is_ref;
        std::size_t label;
    };
    std::vector<Event> events;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        for (const auto& r : ref[i]) {
            events.push_back({r.start, +1, true, i});
            events.push_back({r.end, -1, true, i});
        }
    }
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        for (const auto& r : hyp[i]) {
            events.push_back({r.start, +1, false, i});
            events.push_back({r.end, -1, false, i});
        }
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

    std::vector<int> ref_count(ref.size(), 0), hyp_count(hyp.size(), 0);
    std::vector<Elementary> out;
    std::size_t i = 0;
    while (i < events.size()) {
        const double t = events[i].t;
        while (i < events.size() && events[i].t == t) {
            auto& counts = events[i].is_ref ? ref_count : hyp_count;
            counts[events[i].label] += events[i].delta;
            ++i;
        }
        if (i == events.size()) break;
        const double d = events[i].t - t;
        Elementary e{d, {}, {}};
        for (std::size_t k = 0; k < ref_count.size(); ++k)
            if (ref_count[k] > 0) e.ref_active.push_back(k);
        for (std::size_t k = 0; k < hyp_count.size(); ++k)
            if (hyp_count[k] > 0) e.hyp_active.push_back(k);
        if (!e.ref_active.empty() || !e.hyp_active.empty()) out.push_back(std::move(e));
    }
    return out;
}

}  // namespace detail

// ─── Assignment ─────────────────────────────────────────────────────────────

// Exact maximum-weight assignment on a rows x cols matrix (Hungarian method,
// O(n^2 m)). Returns, for each row, the assigned column or -1.
inline std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weight) {
    const std::size_t rows = weight.size();
    if (rows == 0) return {};
    const std::size_t cols = weight.front().size();
    if (cols == 0) return std::vector<int>(rows, -1);

    const bool transposed = rows > cols;
    const std::size_t n = transposed ? cols : rows;
    const std::size_t m = transposed ? rows : cols;
    auto cost = [&](std::size_t i, std::size_t j) {
        return transposed ? -weight[j][i] : -weight[i][j];
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        const std::size_t small_idx = p[j] - 1;
        const std::size_t big_idx = j - 1;
        if (transposed) out[big_idx] = static_cast<int>(small_idx);
        else out[small_idx] = static_cast<int>(big_idx);
    }
    return out;
}

using LabelMapping = std::map<std::string, std::string>;

namespace detail {

struct Scoring {
    std::vector<std::string> ref_labels;
    std::vector<std::string> hyp_labels;
    std::vector<Elementary> pieces;
    std::vector<std::vector<double>> cooccurrence;  // [hyp][ref]
};

inline Scoring prepare(const Annotation& reference, const Annotation& hypothesis,
                       const ScoringMask& mask) {
    Scoring s;
    const auto ref_support = label_support(reference, mask);
    const auto hyp_support = label_support(hypothesis, mask);
    s.ref_labels = canonical_order(ref_support);
    s.hyp_labels = canonical_order(hyp_support);
    std::vector<std::vector<Region>> ref, hyp;
    for (const auto& l : s.ref_labels) ref.push_back(ref_support.at(l));
    for (const auto& l : s.hyp_labels) hyp.push_back(hyp_support.at(l));
    s.pieces = sweep(ref, hyp);
    s.cooccurrence.assign(s.hyp_labels.size(), std::vector<double>(s.ref_labels.size(), 0.0));
    for (const auto& e : s.pieces) {
        for (auto h : e.hyp_active)
            for (auto r : e.ref_active) s.cooccurrence[h][r] += e.duration;
    }
    return s;
}

// hyp index -> ref index (or -1), pairs with zero overlap left unmapped.
inline std::vector<int> solve_mapping(const Scoring& s) {
    auto assign = max_weight_assignment(s.cooccurrence);
    for (std::size_t h = 0; h < assign.size(); ++h) {
        if (assign[h] >= 0 && !(s.cooccurrence[h][static_cast<std::size_t>(assign[h])] > 0.0)) {
            assign[h] = -1;
        }
    }
    return assign;
}

inline LabelMapping to_label_mapping(const Scoring& s, const std::vector<int>& assign) {
    LabelMapping out;
    for (std::size_t h = 0; h < assign.size(); ++h) {
        if (assign[h] >= 0) out[s.hyp_labels[h]] = s.ref_labels[static_cast<std::size_t>(assign[h])];
    }
    return out;
}

}  // namespace detail

// One-to-one hypothesis→reference label mapping maximizing total co-occurring
// speech over the whole timeline.
inline LabelMapping optimal_mapping(const Annotation& reference, const Annotation& hypothesis) {
    const auto s = detail::prepare(reference, hypothesis, {});
    return detail::to_label_mapping(s, detail::solve_mapping(s));
}

// ─── DER ────────────────────────────────────────────────────────────────────

// Every reference boundary b excludes [b - collar, b + collar].
inline ScoringMask apply_collar(const Annotation& reference, double collar) {
    if (!(collar > 0.0)) return {};
    std::vector<Region> rs;
    for (const auto& seg : reference.segments) {
        rs.push_back({seg.interval.start - collar, seg.interval.start + collar});
        rs.push_back({seg.interval.end - collar, seg.interval.end + collar});
    }
    return detail::merge_regions(std::move(rs));
}

struct DerReport {
    double der = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    double missed = 0.0;
    double total_reference = 0.0;  // seconds of reference speaker-time scored
    LabelMapping mapping;

    // Absolute speaker-time (seconds) behind each fraction.
    double false_alarm_time = 0.0;
    double confusion_time = 0.0;
    double missed_time = 0.0;
};

inline DerReport der(const Annotation& reference, const Annotation& hypothesis, double collar) {
    const auto mask = apply_collar(reference, collar);
    const auto s = detail::prepare(reference, hypothesis, mask);
    const auto assign = detail::solve_mapping(s);

    DerReport rep;
    rep.mapping = detail::to_label_mapping(s, assign);
    for (const auto& e : s.pieces) {
        const auto n_ref = static_cast<double>(e.ref_active.size());
        const auto n_hyp = static_cast<double>(e.hyp_active.size());
        double correct = 0.0;
        for (auto h : e.hyp_active) {
            const int r = assign[h];
            if (r >= 0 && std::find(e.ref_active.begin(), e.ref_active.end(),
                                    static_cast<std::size_t>(r)) != e.ref_active.end()) {
                correct += 1.0;
            }
        }
        rep.total_reference += e.duration * n_ref;
        rep.missed_time += e.duration * std::max(0.0, n_ref - n_hyp);
        rep.false_alarm_time += e.duration * std::max(0.0, n_hyp - n_ref);
        rep.confusion_time += e.duration * (std::min(n_ref, n_hyp) - correct);
    }
    if (!(rep.total_reference > 0.0)) throw EmptyReference("reference has no scored speech");
    rep.missed = rep.missed_time / rep.total_reference;
    rep.false_alarm = rep.false_alarm_time / rep.total_reference;
    rep.confusion = rep.confusion_time / rep.total_reference;
    rep.der = rep.missed + rep.false_alarm + rep.confusion;
    return rep;
}

// Duration-weighted aggregate over files: absolute error times summed, then
// divided by the summed reference time. Mapping is left empty.
inline DerReport aggregate_micro(const std::vector<DerReport>& reports) {
    DerReport out;
    for (const auto& r : reports) {
        out.total_reference += r.total_reference;
        out.missed_time += r.missed_time;
        out.false_alarm_time += r.false_alarm_time;
        out.confusion_time += r.confusion_time;
    }
    if (!(out.total_reference > 0.0)) throw EmptyReference("no scored reference speech");
    out.missed = out.missed_time / out.total_reference;
    out.false_alarm = out.false_alarm_time / out.total_reference;
    out.confusion = out.confusion_time / out.total_reference;
    out.der = out.missed + out.false_alarm + out.confusion;
    return out;
}

// Unweighted mean of per-file fractions.
inline DerReport aggregate_macro(const std::vector<DerReport>& reports) {
    if (reports.empty()) throw EmptyReference("no reports to aggregate");
    DerReport out;
    const auto n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        out.total_reference += r.total_reference;
        out.missed += r.missed / n;
        out.false_alarm += r.false_alarm / n;
        out.confusion += r.confusion / n;
        out.missed_time += r.missed_time;
        out.false_alarm_time += r.false_alarm_time;
        out.confusion_time += r.confusion_time;
    }
    out.der = out.missed + out.false_alarm + out.confusion;
    return out;
}

// ─── WER and relative reduction ─────────────────────────────────────────────

inline double wer(const std::vector<std::string>& reference_words,
                  const std::vector<std::string>& hypothesis_words) {
    std::vector<std::string> ref, hyp;
    for (const auto& w : reference_words)
        for (auto& t : wer_tokens(w)) ref.push_back(std::move(t));
    for (const auto& w : hypothesis_words)
        for (auto& t : wer_tokens(w)) hyp.push_back(std::move(t));
    if (ref.empty()) throw EmptyReference("WER reference has no words");
    return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

inline double relative_reduction(double baseline, double improved) {
    if (baseline == 0.0) throw DivisionByZero("relative reduction against a zero baseline");
    if (baseline < 0.0) throw InvalidArgument("baseline error must be positive");
    return (baseline - improved) / baseline;
}

// ─── RTTM ───────────────────────────────────────────────────────────────────

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// file id -> annotation. Only SPEAKER records are read; blank lines and lines
// starting with '#' are skipped, other record types are ignored.
inline std::map<std::string, Annotation> parse_rttm(std::string_view text,
                                                    const std::string& source = "<rttm>") {
    std::map<std::string, Annotation> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto fields = split_whitespace(line);
        if (fields.empty() || fields[0].front() == '#') continue;
        if (fields[0] != "SPEAKER") {
            if (fields[0].find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ-") == std::string::npos) continue;
            throw ParseError(source, line_no, "unknown record type '" + fields[0] + "'");
        }
        if (fields.size() < 8) throw ParseError(source, line_no, "SPEAKER record needs at least 8 fields");
        double onset = 0.0, duration = 0.0;
        try {
            std::size_t used = 0;
            onset = std::stod(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("trailing");
            duration = std::stod(fields[4], &used);
            if (used != fields[4].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(source, line_no, "bad onset/duration");
        }
        if (!(onset >= 0.0) || !(duration >= 0.0)) {
            throw ParseError(source, line_no, "negative onset or duration");
        }
        out[fields[1]].add(onset, onset + duration, fields[7]);
    }
    return out;
}

inline std::string format_rttm(const std::string& file_id, const Annotation& ann) {
    auto segs = ann.segments;
    std::stable_sort(segs.begin(), segs.end(), [](const LabeledInterval& a, const LabeledInterval& b) {
        return a.interval.start < b.interval.start;
    });
    std::string out;
    char buf[64];
    for (const auto& s : segs) {
        out += "SPEAKER " + file_id + " 1 ";
        std::snprintf(buf, sizeof buf, "%.3f %.3f", s.interval.start, s.interval.duration());
        out += buf;
        out += " <NA> <NA> " + s.label + " <NA> <NA>\n";
    }
    return out;
}

// ─── Reporting ──────────────────────────────────────────────────────────────

struct ScoreRow {
    std::string name;
    DerReport report;
    std::optional<double> wer;
};

// Percentages in the column order DER, FA, Conf., Miss Det. (+ WER).
inline std::string format_der_table(const std::vector<ScoreRow>& rows) {
    const bool with_wer = std::any_of(rows.begin(), rows.end(), [](const ScoreRow& r) { return r.wer.has_value(); });
    std::size_t name_w = 4;
    for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s %10s", static_cast<int>(name_w), "File", "DER",
                  "FA", "Conf.", "Miss Det.");
    os << buf;
    if (with_wer) {
        std::snprintf(buf, sizeof buf, " %8s", "WER");
        os << buf;
    }
    os << '\n';
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s %8.2f %8.2f %8.2f %10.2f", static_cast<int>(name_w),
                      r.name.c_str(), 100.0 * r.report.der, 100.0 * r.report.false_alarm,
                      100.0 * r.report.confusion, 100.0 * r.report.missed);
        os << buf;
        if (with_wer) {
            if (r.wer) std::snprintf(buf, sizeof buf, " %8.2f", 100.0 * *r.wer);
            else std::snprintf(buf, sizeof buf, " %8s", "-");
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace sdpost
