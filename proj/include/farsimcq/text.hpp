#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace farsimcq {

constexpr char32_t kZwnj = 0x200C;

// Minimal UTF-8 codec. Invalid byte sequences decode to U+FFFD so that
// normalization stays idempotent on arbitrary input.
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80) {
            cp = (b0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
            len = 2;
            if (cp < 0x80) cp = 0xFFFD;
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80) {
            cp = (b0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                 (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
            len = 3;
            if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < s.size() &&
                   (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 3]) & 0xC0) == 0x80) {
            cp = (b0 & 0x07u) << 18 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                 (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                 (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
            len = 4;
            if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
        }
        if (cp == 0xFFFD) len = (len == 1) ? 1 : len;
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

namespace detail {

inline bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x00A0 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000;
}

// Compatibility folds relevant to Persian text plus fullwidth ASCII.
inline char32_t fold_cp(char32_t cp) {
    // Arabic-Indic and Extended Arabic-Indic digits -> ASCII.
    if (cp >= 0x0660 && cp <= 0x0669) return U'0' + (cp - 0x0660);
    if (cp >= 0x06F0 && cp <= 0x06F9) return U'0' + (cp - 0x06F0);
    // Fullwidth ASCII block.
    if (cp >= 0xFF01 && cp <= 0xFF5E) return cp - 0xFEE0;
    // Arabic Yeh / Alef Maksura -> Farsi Yeh; Arabic Kaf -> Keheh.
    if (cp == 0x064A || cp == 0x0649) return 0x06CC;
    if (cp == 0x0643) return 0x06A9;
    return cp;
}

inline bool drop_cp(char32_t cp) {
    // Zero-width space, word joiner, BOM, soft hyphen, directional marks.
    return cp == 0x200B || cp == 0x2060 || cp == 0xFEFF || cp == 0x00AD || cp == 0x200E ||
           cp == 0x200F;
}

}  // namespace detail

// Canonical text form used for all comparisons and dedupe in the pipeline:
// folds Eastern-Arabic digits to ASCII, folds fullwidth/Arabic compatibility
// variants, collapses whitespace runs to one space, collapses ZWNJ runs to a
// single U+200C, trims ends. Idempotent.
inline std::string normalize_text(std::string_view s) {
    std::u32string cps = utf8_decode(s);
    std::u32string out;
    out.reserve(cps.size());
    for (char32_t raw : cps) {
        if (detail::drop_cp(raw)) continue;
        char32_t cp = detail::fold_cp(raw);
        if (detail::is_space_cp(cp)) {
            if (!out.empty() && out.back() == U' ') continue;
            out.push_back(U' ');
            continue;
        }
        if (cp == kZwnj) {
            if (!out.empty() && out.back() == kZwnj) continue;
            out.push_back(kZwnj);
            continue;
        }
        out.push_back(cp);
    }
    size_t begin = 0, end = out.size();
    while (begin < end && out[begin] == U' ') ++begin;
    while (end > begin && out[end - 1] == U' ') --end;
    return utf8_encode(out.substr(begin, end - begin));
}

inline bool same_normalized(std::string_view a, std::string_view b) {
    return normalize_text(a) == normalize_text(b);
}

// Whitespace tokenization of an already UTF-8 string (bytes preserved).
inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) toks.emplace_back(s.substr(start, i - start));
    }
    return toks;
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 32;
    return out;
}

inline bool digits_only(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

// FNV-1a, used for stable per-item shuffle seeds.
inline uint64_t stable_hash(std::string_view s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace farsimcq
