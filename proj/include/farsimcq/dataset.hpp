#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "farsimcq/types.hpp"

namespace farsimcq {

using json = nlohmann::json;

// QA input schema: {"id", "context", "question", "answer", "answer_start"?}
inline QARecord parse_qa_line(const std::string& line, size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error&) {
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("context") ||
        !j.contains("question") || !j.contains("answer") || !j["id"].is_string() ||
        !j["context"].is_string() || !j["question"].is_string() || !j["answer"].is_string())
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));

    QARecord rec;
    rec.id = j["id"].get<std::string>();
    rec.context = j["context"].get<std::string>();
    rec.question = j["question"].get<std::string>();
    rec.answer = j["answer"].get<std::string>();
    if (j.contains("answer_start") && !j["answer_start"].is_null()) {
        if (!j["answer_start"].is_number_integer())
            throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        rec.answer_start = j["answer_start"].get<int64_t>();
    }
    if (j.contains("metadata") && j["metadata"].is_object())
        for (auto& [k, v] : j["metadata"].items())
            if (v.is_string()) rec.metadata[k] = v.get<std::string>();

    if (normalize_text(rec.answer).empty())
        throw Error(ErrorCode::MALFORMED_LINE,
                    "line " + std::to_string(line_no) + ": empty answer");
    if (rec.answer_start) {
        int64_t start = *rec.answer_start;
        if (start < 0 || static_cast<size_t>(start) + rec.answer.size() > rec.context.size() ||
            !same_normalized(rec.context.substr(static_cast<size_t>(start), rec.answer.size()),
                             rec.answer))
            throw Error(ErrorCode::SPAN_MISMATCH, rec.id);
    }
    return rec;
}

inline std::vector<QARecord> read_dataset(std::istream& in) {
    std::vector<QARecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(parse_qa_line(line, line_no));
    }
    return out;
}

inline std::vector<QARecord> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    return read_dataset(in);
}

inline json mcq_to_json(const MCQItem& item) {
    json j;
    j["id"] = item.id;
    j["question"] = item.question;
    j["choices"] = item.choices;
    j["correct_index"] = item.correct_index;
    j["qtype"] = to_string(item.qtype);
    j["content"] = to_string(item.content);
    json flags = json::array();
    for (MCQFlag f : item.flags) flags.push_back(to_string(f));
    j["flags"] = flags;
    return j;
}

inline MCQItem parse_mcq_line(const std::string& line, size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error&) {
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("question") ||
        !j.contains("choices") || !j.contains("correct_index"))
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    MCQItem item;
    item.id = j["id"].get<std::string>();
    item.question = j["question"].get<std::string>();
    for (const auto& c : j["choices"]) item.choices.push_back(c.get<std::string>());
    item.correct_index = j["correct_index"].get<int>();
    if (j.contains("qtype")) {
        auto t = qtype_from_string(j["qtype"].get<std::string>());
        if (!t) throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        item.qtype = *t;
    }
    if (j.contains("content")) {
        auto c = content_from_string(j["content"].get<std::string>());
        if (!c) throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        item.content = *c;
    }
    if (j.contains("flags"))
        for (const auto& f : j["flags"]) {
            std::string s = f.get<std::string>();
            if (s == "INCOMPLETE_DISTRACTORS") item.flags.push_back(MCQFlag::INCOMPLETE_DISTRACTORS);
            else if (s == "FILTER_RELAXED") item.flags.push_back(MCQFlag::FILTER_RELAXED);
        }
    validate_mcq(item, nullptr, /*allow_incomplete=*/true);
    return item;
}

inline std::vector<MCQItem> read_mcq_dataset(std::istream& in) {
    std::vector<MCQItem> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(parse_mcq_line(line, line_no));
    }
    return out;
}

inline std::vector<MCQItem> read_mcq_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    return read_mcq_dataset(in);
}

inline size_t write_mcq_dataset(const std::vector<MCQItem>& items, std::ostream& out,
                                bool allow_incomplete = false) {
    size_t n = 0;
    for (const auto& item : items) {
        validate_mcq(item, nullptr, allow_incomplete);
        out << mcq_to_json(item).dump() << '\n';
        ++n;
    }
    if (!out) throw Error(ErrorCode::IO_ERROR, "write failed");
    return n;
}

inline size_t write_mcq_dataset(const std::vector<MCQItem>& items, const std::string& path,
                                bool allow_incomplete = false) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    return write_mcq_dataset(items, out, allow_incomplete);
}

// Candidate audit log line (one per surviving or rejected candidate).
inline json candidate_audit_json(const std::string& item_id, const Candidate& c) {
    json j;
    j["id"] = item_id;
    j["surface"] = c.surface;
    j["provenance"] = std::string(c.provenance.kind == ProvenanceKind::FILL_MASK
                                      ? "FILL_MASK:"
                                      : "STATIC_EMBEDDING:") +
                      c.provenance.source_id;
    j["generator_score"] = c.generator_score;
    j["kg_score"] = c.kg_score ? json(*c.kg_score) : json(nullptr);
    j["context_score"] = c.context_score ? json(*c.context_score) : json(nullptr);
    j["fused_score"] = c.fused_score ? json(*c.fused_score) : json(nullptr);
    json rejections = json::array();
    for (const auto& v : c.rejections) {
        json r;
        r["stage"] = to_string(v.stage);
        r["passed"] = v.passed;
        r["reason"] = v.reason;
        rejections.push_back(r);
    }
    j["rejections"] = rejections;
    return j;
}

}  // namespace farsimcq
