#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace sdpost {

// Decodes UTF-8 into code points. Malformed bytes are passed through as
// single units so the function is total.
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        char32_t cp = lead;
        if (lead >= 0xC0 && lead < 0xE0) {
            extra = 1;
            cp = lead & 0x1F;
        } else if (lead >= 0xE0 && lead < 0xF0) {
            extra = 2;
            cp = lead & 0x0F;
        } else if (lead >= 0xF0 && lead < 0xF8) {
            extra = 3;
            cp = lead & 0x07;
        }
        bool ok = i + extra < s.size();
        for (std::size_t k = 1; ok && k <= extra; ++k) {
            const auto cont = static_cast<unsigned char>(s[i + k]);
            if ((cont & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (!ok) {
            out.push_back(lead);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

// Unit-cost insert/delete/substitute distance over any two random-access
// sequences. Two-row dynamic programming.
template <typename SeqA, typename SeqB>
std::size_t edit_distance(const SeqA& a, const SeqB& b) {
    const std::size_t n = std::size(a);
    const std::size_t m = std::size(b);
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// 1 - d(a,b) / max(|a|,|b|) over code points; 1.0 when both are empty.
inline double levenshtein_similarity(std::string_view a, std::string_view b) {
    const auto ua = utf8_decode(a);
    const auto ub = utf8_decode(b);
    const std::size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(edit_distance(ua, ub)) / static_cast<double>(longest);
}

inline bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

inline std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Tokens lowercased with every ASCII punctuation character removed; tokens
// that become empty are dropped. Used for transcript comparison.
inline std::vector<std::string> normalized_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& tok : split_whitespace(text)) {
        std::string t;
        for (unsigned char c : tok) {
            if (is_ascii_punct(c)) continue;
            t.push_back(static_cast<char>(std::tolower(c)));
        }
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

inline std::string normalize_transcript(std::string_view text) {
    std::string out;
    for (const auto& t : normalized_tokens(text)) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

// WER normalization: lowercase, strip leading/trailing punctuation per token,
// collapse whitespace. Interior punctuation ("don't") is kept.
inline std::vector<std::string> wer_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& tok : split_whitespace(text)) {
        std::size_t b = 0, e = tok.size();
        while (b < e && is_ascii_punct(static_cast<unsigned char>(tok[b]))) ++b;
        while (e > b && is_ascii_punct(static_cast<unsigned char>(tok[e - 1]))) --e;
        if (e > b) out.push_back(ascii_lower(std::string_view(tok).substr(b, e - b)));
    }
    return out;
}

// True when `needle` occurs as a contiguous run inside `haystack`.
template <typename T>
bool contains_contiguous(const std::vector<T>& haystack, const std::vector<T>& needle) {
    if (needle.empty()) return true;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace sdpost
