#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "farsimcq/error.hpp"
#include "farsimcq/text.hpp"

namespace farsimcq {

// Source item: a context passage, a question, and a short answer
// (optionally with its character offset into the context).
struct QARecord {
    std::string id;
    std::string context;
    std::string question;
    std::string answer;
    std::optional<int64_t> answer_start;
    std::map<std::string, std::string> metadata;
};

enum class ProvenanceKind { FILL_MASK, STATIC_EMBEDDING };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::FILL_MASK;
    std::string source_id;  // model_id or embedding_id

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

enum class FilterStage { POS, WRITTEN_FORM, NER, DEDUPE };

inline const char* to_string(FilterStage s) {
    switch (s) {
        case FilterStage::POS: return "POS";
        case FilterStage::WRITTEN_FORM: return "WRITTEN_FORM";
        case FilterStage::NER: return "NER";
        case FilterStage::DEDUPE: return "DEDUPE";
    }
    return "?";
}

struct FilterVerdict {
    FilterStage stage = FilterStage::POS;
    bool passed = false;
    std::string reason;  // non-empty whenever passed == false
};

struct Candidate {
    std::string surface;
    Provenance provenance;
    double generator_score = 0.0;  // model-assigned, unnormalized
    std::optional<double> kg_score;
    std::optional<double> context_score;
    std::optional<double> fused_score;
    std::vector<FilterVerdict> rejections;
};

enum class QType { WHAT, WHEN, HOW, HOW_MANY, WHERE, WHO, WHICH };

inline const char* to_string(QType t) {
    switch (t) {
        case QType::WHAT: return "WHAT";
        case QType::WHEN: return "WHEN";
        case QType::HOW: return "HOW";
        case QType::HOW_MANY: return "HOW_MANY";
        case QType::WHERE: return "WHERE";
        case QType::WHO: return "WHO";
        case QType::WHICH: return "WHICH";
    }
    return "?";
}

inline std::optional<QType> qtype_from_string(std::string_view s) {
    if (s == "WHAT") return QType::WHAT;
    if (s == "WHEN") return QType::WHEN;
    if (s == "HOW") return QType::HOW;
    if (s == "HOW_MANY") return QType::HOW_MANY;
    if (s == "WHERE") return QType::WHERE;
    if (s == "WHO") return QType::WHO;
    if (s == "WHICH") return QType::WHICH;
    return std::nullopt;
}

enum class ContentLabel {
    HISTORY,
    TECHNOLOGY,
    HEALTH_MEDICINE,
    ECONOMY_COMMERCE,
    POLITICS,
    GEOGRAPHY,
    ART_CULTURE,
    SCIENCE,
    SPORT,
    SOCIETY,
    RELIGION,
    OTHERS,
};

inline constexpr int kContentLabelCount = 12;

inline const char* to_string(ContentLabel c) {
    switch (c) {
        case ContentLabel::HISTORY: return "HISTORY";
        case ContentLabel::TECHNOLOGY: return "TECHNOLOGY";
        case ContentLabel::HEALTH_MEDICINE: return "HEALTH_MEDICINE";
        case ContentLabel::ECONOMY_COMMERCE: return "ECONOMY_COMMERCE";
        case ContentLabel::POLITICS: return "POLITICS";
        case ContentLabel::GEOGRAPHY: return "GEOGRAPHY";
        case ContentLabel::ART_CULTURE: return "ART_CULTURE";
        case ContentLabel::SCIENCE: return "SCIENCE";
        case ContentLabel::SPORT: return "SPORT";
        case ContentLabel::SOCIETY: return "SOCIETY";
        case ContentLabel::RELIGION: return "RELIGION";
        case ContentLabel::OTHERS: return "OTHERS";
    }
    return "?";
}

inline std::optional<ContentLabel> content_from_string(std::string_view s) {
    for (int i = 0; i < kContentLabelCount; ++i) {
        auto c = static_cast<ContentLabel>(i);
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

enum class MCQFlag { INCOMPLETE_DISTRACTORS, FILTER_RELAXED };

inline const char* to_string(MCQFlag f) {
    switch (f) {
        case MCQFlag::INCOMPLETE_DISTRACTORS: return "INCOMPLETE_DISTRACTORS";
        case MCQFlag::FILTER_RELAXED: return "FILTER_RELAXED";
    }
    return "?";
}

struct MCQItem {
    std::string id;
    std::string question;
    std::vector<std::string> choices;  // exactly 4 in a valid item
    int correct_index = 0;
    QType qtype = QType::WHAT;
    ContentLabel content = ContentLabel::OTHERS;
    std::vector<MCQFlag> flags;

    bool has_flag(MCQFlag f) const {
        for (MCQFlag g : flags)
            if (g == f) return true;
        return false;
    }
};

// Validates the MCQItem invariants against the source answer (when known).
// Items flagged INCOMPLETE_DISTRACTORS may carry fewer than 4 choices when
// allow_incomplete is set (CLI keep-incomplete mode).
inline void validate_mcq(const MCQItem& item, const std::string* source_answer = nullptr,
                         bool allow_incomplete = false) {
    bool incomplete_ok = allow_incomplete && item.has_flag(MCQFlag::INCOMPLETE_DISTRACTORS);
    if (item.choices.size() != 4 && !(incomplete_ok && item.choices.size() >= 2 &&
                                      item.choices.size() < 4))
        throw Error(ErrorCode::INVARIANT_VIOLATION, item.id + ": expected 4 choices");
    if (item.correct_index < 0 ||
        item.correct_index >= static_cast<int>(item.choices.size()))
        throw Error(ErrorCode::INVARIANT_VIOLATION, item.id + ": correct_index out of range");
    std::vector<std::string> norm;
    for (const auto& c : item.choices) norm.push_back(normalize_text(c));
    for (size_t i = 0; i < norm.size(); ++i)
        for (size_t j = i + 1; j < norm.size(); ++j)
            if (norm[i] == norm[j])
                throw Error(ErrorCode::INVARIANT_VIOLATION, item.id + ": duplicate choices");
    if (source_answer &&
        norm[static_cast<size_t>(item.correct_index)] != normalize_text(*source_answer))
        throw Error(ErrorCode::INVARIANT_VIOLATION,
                    item.id + ": correct choice does not match source answer");
}

enum class SeedScope { PER_ITEM_ID, GLOBAL };

struct PipelineConfig {
    int fillmask_top_k = 20;
    int embedding_top_k = 10;
    int distractor_count = 3;
    SeedScope shuffle_seed_scope = SeedScope::PER_ITEM_ID;
    uint64_t global_seed = 0;  // used when shuffle_seed_scope == GLOBAL
    std::vector<FilterStage> relaxation_policy = {FilterStage::POS, FilterStage::NER};
    double w_kg = 0.5;
    double w_ctx = 0.5;

    void validate() const {
        if (fillmask_top_k < 1 || embedding_top_k < 1 || distractor_count < 1)
            throw Error(ErrorCode::CONFIG_ERROR, "counts must be >= 1");
        if (std::abs(w_kg + w_ctx - 1.0) > 1e-9)
            throw Error(ErrorCode::CONFIG_ERROR, "fusion weights must sum to 1");
    }
};

}  // namespace farsimcq
