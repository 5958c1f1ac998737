#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "farsimcq/types.hpp"

namespace farsimcq {

// Strips leading/trailing punctuation from a normalized token. Covers ASCII
// punctuation plus the Arabic question mark and comma.
inline std::string strip_edge_punct(const std::string& tok) {
    auto is_punct_at = [&](size_t i, size_t& len) {
        unsigned char c = static_cast<unsigned char>(tok[i]);
        if (c < 0x80 && std::ispunct(c)) {
            len = 1;
            return true;
        }
        // U+061F ARABIC QUESTION MARK (d8 9f), U+060C ARABIC COMMA (d8 8c)
        if (c == 0xD8 && i + 1 < tok.size()) {
            unsigned char c2 = static_cast<unsigned char>(tok[i + 1]);
            if (c2 == 0x9F || c2 == 0x8C) {
                len = 2;
                return true;
            }
        }
        len = 0;
        return false;
    };
    size_t begin = 0, end = tok.size(), len = 0;
    while (begin < end && is_punct_at(begin, len)) begin += len;
    // Walk backwards one codepoint at a time.
    while (end > begin) {
        size_t cp_start = end - 1;
        while (cp_start > begin &&
               (static_cast<unsigned char>(tok[cp_start]) & 0xC0) == 0x80)
            --cp_start;
        if (is_punct_at(cp_start, len) && cp_start + len == end) end = cp_start;
        else break;
    }
    return tok.substr(begin, end - begin);
}

// Canonical token form for lexicon matching: normalized, ASCII-lowercased,
// edge punctuation stripped.
inline std::vector<std::string> match_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& t : split_ws(normalize_text(text))) {
        std::string s = strip_edge_punct(to_lower_ascii(t));
        if (!s.empty()) out.push_back(s);
    }
    return out;
}

struct LexiconEntry {
    std::vector<std::string> pattern;  // normalized tokens
    QType qtype = QType::WHAT;
    size_t file_order = 0;
};

// Ordered question-word lexicon. Priority: longest token count first, then
// file order; first match wins.
struct QuestionWordLexicon {
    std::vector<LexiconEntry> entries;
    QType fallback_qtype = QType::WHAT;

    void add(const std::string& pattern, QType qtype) {
        LexiconEntry e;
        for (const auto& t : match_tokens(pattern)) e.pattern.push_back(t);
        if (e.pattern.empty()) throw Error(ErrorCode::CONFIG_ERROR, "empty lexicon pattern");
        e.qtype = qtype;
        e.file_order = entries.size();
        entries.push_back(e);
        std::stable_sort(entries.begin(), entries.end(),
                         [](const LexiconEntry& a, const LexiconEntry& b) {
                             if (a.pattern.size() != b.pattern.size())
                                 return a.pattern.size() > b.pattern.size();
                             return a.file_order < b.file_order;
                         });
    }

    static QuestionWordLexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open lexicon " + path);
        QuestionWordLexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw Error(ErrorCode::MALFORMED_LINE, "lexicon: " + line);
            auto qt = qtype_from_string(normalize_text(line.substr(tab + 1)));
            if (!qt) throw Error(ErrorCode::MALFORMED_LINE, "lexicon qtype: " + line);
            lex.add(line.substr(0, tab), *qt);
        }
        return lex;
    }

    // Shipped English defaults; the Persian lexicon ships as a data file.
    static QuestionWordLexicon english_default() {
        QuestionWordLexicon lex;
        lex.add("how many", QType::HOW_MANY);
        lex.add("how much", QType::HOW_MANY);
        lex.add("what", QType::WHAT);
        lex.add("when", QType::WHEN);
        lex.add("how", QType::HOW);
        lex.add("where", QType::WHERE);
        lex.add("who", QType::WHO);
        lex.add("whom", QType::WHO);
        lex.add("whose", QType::WHO);
        lex.add("which", QType::WHICH);
        return lex;
    }
};

// Returns the token index range [first, first+len) of the first lexicon
// pattern found in `tokens`, or nullopt.
inline std::optional<std::pair<size_t, size_t>> find_question_word(
    const std::vector<std::string>& tokens, const QuestionWordLexicon& lex,
    QType* matched_qtype = nullptr) {
    for (const auto& e : lex.entries) {
        if (e.pattern.size() > tokens.size()) continue;
        for (size_t i = 0; i + e.pattern.size() <= tokens.size(); ++i) {
            bool ok = true;
            for (size_t k = 0; k < e.pattern.size(); ++k)
                if (strip_edge_punct(to_lower_ascii(normalize_text(tokens[i + k]))) !=
                    e.pattern[k]) {
                    ok = false;
                    break;
                }
            if (ok) {
                if (matched_qtype) *matched_qtype = e.qtype;
                return std::make_pair(i, e.pattern.size());
            }
        }
    }
    return std::nullopt;
}

inline QType classify_type(const std::string& question, const QuestionWordLexicon& lex) {
    if (normalize_text(question).empty())
        throw Error(ErrorCode::EMPTY_FIELD, "question");
    auto tokens = match_tokens(question);
    QType qt = lex.fallback_qtype;
    if (find_question_word(tokens, lex, &qt)) return qt;
    return lex.fallback_qtype;
}

// --- Content classification via an external LLM client -------------------

struct LLMClient {
    virtual ~LLMClient() = default;
    virtual std::string id() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
};

inline const std::vector<std::pair<std::string, ContentLabel>>& content_aliases() {
    static const std::vector<std::pair<std::string, ContentLabel>> aliases = {
        {"health and medicine", ContentLabel::HEALTH_MEDICINE},
        {"economy and commerce", ContentLabel::ECONOMY_COMMERCE},
        {"art and culture", ContentLabel::ART_CULTURE},
        {"history", ContentLabel::HISTORY},
        {"historical", ContentLabel::HISTORY},
        {"technology", ContentLabel::TECHNOLOGY},
        {"tech", ContentLabel::TECHNOLOGY},
        {"health", ContentLabel::HEALTH_MEDICINE},
        {"medicine", ContentLabel::HEALTH_MEDICINE},
        {"medical", ContentLabel::HEALTH_MEDICINE},
        {"economy", ContentLabel::ECONOMY_COMMERCE},
        {"commerce", ContentLabel::ECONOMY_COMMERCE},
        {"economic", ContentLabel::ECONOMY_COMMERCE},
        {"politics", ContentLabel::POLITICS},
        {"political", ContentLabel::POLITICS},
        {"geography", ContentLabel::GEOGRAPHY},
        {"geographic", ContentLabel::GEOGRAPHY},
        {"art", ContentLabel::ART_CULTURE},
        {"culture", ContentLabel::ART_CULTURE},
        {"cultural", ContentLabel::ART_CULTURE},
        {"science", ContentLabel::SCIENCE},
        {"scientific", ContentLabel::SCIENCE},
        {"sport", ContentLabel::SPORT},
        {"sports", ContentLabel::SPORT},
        {"society", ContentLabel::SOCIETY},
        {"social", ContentLabel::SOCIETY},
        {"religion", ContentLabel::RELIGION},
        {"religious", ContentLabel::RELIGION},
        {"others", ContentLabel::OTHERS},
        {"other", ContentLabel::OTHERS},
    };
    return aliases;
}

// Scans a client response for content-label aliases; returns a label iff
// exactly one distinct label is mentioned.
inline std::optional<ContentLabel> parse_content_response(const std::string& response) {
    std::string norm = " " + to_lower_ascii(normalize_text(response)) + " ";
    // Strip punctuation into spaces so aliases match as whole words.
    for (char& c : norm)
        if (static_cast<unsigned char>(c) < 0x80 && std::ispunct(static_cast<unsigned char>(c)))
            c = ' ';
    std::vector<ContentLabel> found;
    for (const auto& [alias, label] : content_aliases()) {
        if (norm.find(" " + alias + " ") == std::string::npos) continue;
        if (std::find(found.begin(), found.end(), label) == found.end()) found.push_back(label);
    }
    if (found.size() == 1) return found[0];
    return std::nullopt;
}

inline std::string render_content_prompt(const std::string& prompt_template,
                                         const MCQItem& item) {
    std::string choices;
    for (size_t i = 0; i < item.choices.size(); ++i) {
        if (i) choices += "\n";
        choices += std::to_string(i + 1) + ") " + item.choices[i];
    }
    std::string out = prompt_template;
    auto replace_all = [&](const std::string& slot, const std::string& value) {
        size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    };
    replace_all("{{question}}", item.question);
    replace_all("{{choices}}", choices);
    return out;
}

// Shipped default prompt: question + choices + a 12-category instruction.
inline std::string default_content_prompt() {
    return "Classify the following multiple-choice question into exactly one of these "
           "categories: history, technology, health and medicine, economy and commerce, "
           "politics, geography, art and culture, science, sport, society, religion, others.\n"
           "Question: {{question}}\nChoices:\n{{choices}}\n"
           "Answer with the category name only.";
}

inline ContentLabel classify_content(const MCQItem& item, LLMClient& client,
                                     const std::string& prompt_template,
                                     int max_attempts = 3) {
    if (prompt_template.find("{{question}}") == std::string::npos ||
        prompt_template.find("{{choices}}") == std::string::npos)
        throw Error(ErrorCode::CONFIG_ERROR, "prompt template missing slots");
    std::string prompt = render_content_prompt(prompt_template, item);
    int transport_failures = 0;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::string response;
        try {
            response = client.complete(prompt);
        } catch (const std::exception& e) {
            if (++transport_failures >= max_attempts)
                throw Error(ErrorCode::CLIENT_ERROR, e.what());
            continue;
        }
        if (auto label = parse_content_response(response)) return *label;
    }
    return ContentLabel::OTHERS;  // parseable transport, unparseable content
}

// --- Distribution reporting ----------------------------------------------

struct DistributionReport {
    std::map<QType, size_t> by_qtype;
    std::map<ContentLabel, size_t> by_content;
    size_t total = 0;
};

inline DistributionReport distribution_report(const std::vector<MCQItem>& items) {
    DistributionReport rep;
    for (const auto& item : items) {
        ++rep.by_qtype[item.qtype];
        ++rep.by_content[item.content];
        ++rep.total;
    }
    return rep;
}

inline std::string render_distribution(const DistributionReport& rep) {
    std::ostringstream out;
    out << "type distribution (n=" << rep.total << ")\n";
    for (const auto& [t, n] : rep.by_qtype) out << "  " << to_string(t) << "\t" << n << "\n";
    out << "content distribution (n=" << rep.total << ")\n";
    for (const auto& [c, n] : rep.by_content) out << "  " << to_string(c) << "\t" << n << "\n";
    return out.str();
}

}  // namespace farsimcq
