#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "farsimcq/text.hpp"

namespace farsimcq {

// Compositional number-word grammar covering 0..999,999. Token kinds map to
// both English and Persian surface words; larger scales pass through
// unchanged.
namespace numwords {

enum class Kind { ZERO, UNIT, TEEN, TEN, HUNDRED_MULT, HUNDRED_VALUE, THOUSAND, CONJ };

struct Token {
    Kind kind;
    long value;
};

inline const std::unordered_map<std::string, Token>& word_table() {
    static const std::unordered_map<std::string, Token> table = {
        // English
        {"zero", {Kind::ZERO, 0}},
        {"one", {Kind::UNIT, 1}}, {"two", {Kind::UNIT, 2}}, {"three", {Kind::UNIT, 3}},
        {"four", {Kind::UNIT, 4}}, {"five", {Kind::UNIT, 5}}, {"six", {Kind::UNIT, 6}},
        {"seven", {Kind::UNIT, 7}}, {"eight", {Kind::UNIT, 8}}, {"nine", {Kind::UNIT, 9}},
        {"ten", {Kind::TEEN, 10}}, {"eleven", {Kind::TEEN, 11}}, {"twelve", {Kind::TEEN, 12}},
        {"thirteen", {Kind::TEEN, 13}}, {"fourteen", {Kind::TEEN, 14}},
        {"fifteen", {Kind::TEEN, 15}}, {"sixteen", {Kind::TEEN, 16}},
        {"seventeen", {Kind::TEEN, 17}}, {"eighteen", {Kind::TEEN, 18}},
        {"nineteen", {Kind::TEEN, 19}},
        {"twenty", {Kind::TEN, 20}}, {"thirty", {Kind::TEN, 30}}, {"forty", {Kind::TEN, 40}},
        {"fifty", {Kind::TEN, 50}}, {"sixty", {Kind::TEN, 60}}, {"seventy", {Kind::TEN, 70}},
        {"eighty", {Kind::TEN, 80}}, {"ninety", {Kind::TEN, 90}},
        {"hundred", {Kind::HUNDRED_MULT, 100}},
        {"thousand", {Kind::THOUSAND, 1000}},
        {"and", {Kind::CONJ, 0}},
        // Persian
        {"صفر", {Kind::ZERO, 0}},
        {"یک", {Kind::UNIT, 1}}, {"دو", {Kind::UNIT, 2}}, {"سه", {Kind::UNIT, 3}},
        {"چهار", {Kind::UNIT, 4}}, {"پنج", {Kind::UNIT, 5}}, {"شش", {Kind::UNIT, 6}},
        {"هفت", {Kind::UNIT, 7}}, {"هشت", {Kind::UNIT, 8}}, {"نه", {Kind::UNIT, 9}},
        {"ده", {Kind::TEEN, 10}}, {"یازده", {Kind::TEEN, 11}}, {"دوازده", {Kind::TEEN, 12}},
        {"سیزده", {Kind::TEEN, 13}}, {"چهارده", {Kind::TEEN, 14}},
        {"پانزده", {Kind::TEEN, 15}}, {"شانزده", {Kind::TEEN, 16}},
        {"هفده", {Kind::TEEN, 17}}, {"هجده", {Kind::TEEN, 18}}, {"نوزده", {Kind::TEEN, 19}},
        {"بیست", {Kind::TEN, 20}}, {"سی", {Kind::TEN, 30}}, {"چهل", {Kind::TEN, 40}},
        {"پنجاه", {Kind::TEN, 50}}, {"شصت", {Kind::TEN, 60}}, {"هفتاد", {Kind::TEN, 70}},
        {"هشتاد", {Kind::TEN, 80}}, {"نود", {Kind::TEN, 90}},
        {"صد", {Kind::HUNDRED_VALUE, 100}}, {"دویست", {Kind::HUNDRED_VALUE, 200}},
        {"سیصد", {Kind::HUNDRED_VALUE, 300}}, {"چهارصد", {Kind::HUNDRED_VALUE, 400}},
        {"پانصد", {Kind::HUNDRED_VALUE, 500}}, {"ششصد", {Kind::HUNDRED_VALUE, 600}},
        {"هفتصد", {Kind::HUNDRED_VALUE, 700}}, {"هشتصد", {Kind::HUNDRED_VALUE, 800}},
        {"نهصد", {Kind::HUNDRED_VALUE, 900}},
        {"هزار", {Kind::THOUSAND, 1000}},
        {"و", {Kind::CONJ, 0}},
    };
    return table;
}

inline std::optional<Token> lookup(const std::string& word) {
    auto it = word_table().find(to_lower_ascii(normalize_text(word)));
    if (it == word_table().end()) return std::nullopt;
    return it->second;
}

// Parses tokens[begin, end) as a value in 1..999 (or 0 for a lone ZERO).
inline std::optional<long> parse_small(const std::vector<Token>& toks, size_t begin,
                                       size_t end) {
    if (begin >= end) return std::nullopt;
    if (end - begin == 1 && toks[begin].kind == Kind::ZERO) return 0;
    size_t i = begin;
    long hundreds = 0;
    bool any = false;
    if (toks[i].kind == Kind::UNIT && i + 1 < end && toks[i + 1].kind == Kind::HUNDRED_MULT) {
        hundreds = toks[i].value * 100;
        i += 2;
        any = true;
    } else if (toks[i].kind == Kind::HUNDRED_VALUE) {
        hundreds = toks[i].value;
        i += 1;
        any = true;
    } else if (toks[i].kind == Kind::HUNDRED_MULT) {
        hundreds = 100;  // bare "hundred"
        i += 1;
        any = true;
    }
    if (any && i < end && toks[i].kind == Kind::CONJ && i + 1 < end) ++i;
    long rest = 0;
    if (i < end) {
        if (toks[i].kind == Kind::TEEN) {
            rest = toks[i].value;
            ++i;
        } else if (toks[i].kind == Kind::TEN) {
            rest = toks[i].value;
            ++i;
            if (i < end && toks[i].kind == Kind::CONJ && i + 1 < end &&
                toks[i + 1].kind == Kind::UNIT) {
                rest += toks[i + 1].value;
                i += 2;
            } else if (i < end && toks[i].kind == Kind::UNIT) {
                rest += toks[i].value;
                ++i;
            }
        } else if (toks[i].kind == Kind::UNIT) {
            rest = toks[i].value;
            ++i;
        } else {
            return std::nullopt;
        }
        any = true;
    }
    if (!any || i != end) return std::nullopt;
    return hundreds + rest;
}

// Full grammar: [small] THOUSAND [CONJ] [small] | small.
inline std::optional<long> parse_tokens(const std::vector<Token>& toks, size_t begin,
                                        size_t end) {
    if (begin >= end) return std::nullopt;
    for (size_t t = begin; t < end; ++t) {
        if (toks[t].kind != Kind::THOUSAND) continue;
        long left = 1;
        if (t > begin) {
            auto v = parse_small(toks, begin, t);
            if (!v || *v == 0) return std::nullopt;
            left = *v;
        }
        long right = 0;
        size_t r = t + 1;
        if (r < end) {
            if (toks[r].kind == Kind::CONJ && r + 1 < end) ++r;
            auto v = parse_small(toks, r, end);
            if (!v) return std::nullopt;
            right = *v;
        }
        return left * 1000 + right;
    }
    return parse_small(toks, begin, end);
}

}  // namespace numwords

// Parses an entire phrase as a number word; nullopt if any token is not a
// number word or the sequence does not compose.
inline std::optional<long> parse_number_words(const std::string& phrase) {
    std::vector<numwords::Token> toks;
    for (const auto& raw : split_ws(normalize_text(phrase))) {
        // Accept hyphenated compounds ("twenty-one").
        size_t start = 0;
        std::string word = raw;
        while (true) {
            size_t dash = word.find('-', start);
            std::string piece = dash == std::string::npos ? word.substr(start)
                                                          : word.substr(start, dash - start);
            auto tok = numwords::lookup(piece);
            if (!tok) return std::nullopt;
            toks.push_back(*tok);
            if (dash == std::string::npos) break;
            start = 0;
            word = word.substr(dash + 1);
        }
    }
    return numwords::parse_tokens(toks, 0, toks.size());
}

// Converts maximal number-word runs inside the text to digit strings; other
// text is unchanged. Idempotent (digits are never number words).
inline std::string normalize_written_form(const std::string& s) {
    std::string norm = normalize_text(s);
    std::vector<std::string> tokens = split_ws(norm);
    if (tokens.empty()) return norm;
    std::vector<std::string> out;
    size_t i = 0;
    while (i < tokens.size()) {
        // Longest run starting at i that parses as a number.
        size_t best_end = i;
        long best_value = 0;
        for (size_t j = tokens.size(); j > i; --j) {
            std::string run;
            for (size_t k = i; k < j; ++k) {
                if (k > i) run += " ";
                run += tokens[k];
            }
            if (auto v = parse_number_words(run)) {
                best_end = j;
                best_value = *v;
                break;
            }
        }
        if (best_end > i) {
            out.push_back(std::to_string(best_value));
            i = best_end;
        } else {
            out.push_back(tokens[i]);
            ++i;
        }
    }
    std::string joined;
    for (size_t k = 0; k < out.size(); ++k) {
        if (k) joined += " ";
        joined += out[k];
    }
    return joined;
}

}  // namespace farsimcq
