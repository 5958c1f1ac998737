#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "farsimcq/types.hpp"

namespace farsimcq {

// One scored question from an LLM run: per-choice probabilities plus the
// index of the correct choice.
struct EvalRecord {
    std::string item_id;
    std::string model_id;
    std::string quantization_tag;  // opaque
    std::vector<double> probs;
    int correct_index = 0;
};

inline constexpr double kProbSumTol = 1e-6;

inline void validate_eval_record(const EvalRecord& rec) {
    if (rec.probs.empty() || rec.correct_index < 0 ||
        rec.correct_index >= static_cast<int>(rec.probs.size()))
        throw Error(ErrorCode::MALFORMED_LINE, rec.item_id);
    double sum = 0;
    for (double p : rec.probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
            throw Error(ErrorCode::PROB_SUM_VIOLATION, rec.item_id);
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTol)
        throw Error(ErrorCode::PROB_SUM_VIOLATION, rec.item_id);
}

// Max-subtraction-stabilized softmax.
inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

// Eval log line: {"item_id", "model_id", "quantization"?, "probs"? or
// "loglikelihoods"?, "correct_index"}.
inline EvalRecord parse_eval_line(const std::string& line, size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("item_id") || !j.contains("correct_index"))
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    EvalRecord rec;
    rec.item_id = j["item_id"].get<std::string>();
    if (j.contains("model_id")) rec.model_id = j["model_id"].get<std::string>();
    if (j.contains("quantization") && j["quantization"].is_string())
        rec.quantization_tag = j["quantization"].get<std::string>();
    rec.correct_index = j["correct_index"].get<int>();
    if (j.contains("probs") && j["probs"].is_array()) {
        for (const auto& p : j["probs"]) rec.probs.push_back(p.get<double>());
    } else if (j.contains("loglikelihoods") && j["loglikelihoods"].is_array()) {
        std::vector<double> ll;
        for (const auto& p : j["loglikelihoods"]) ll.push_back(p.get<double>());
        if (ll.empty()) throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        rec.probs = softmax(ll);
    } else {
        throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
    }
    validate_eval_record(rec);
    return rec;
}

inline std::vector<EvalRecord> ingest_logs(std::istream& in) {
    std::vector<EvalRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(parse_eval_line(line, line_no));
    }
    return out;
}

inline std::vector<EvalRecord> ingest_logs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open " + path);
    return ingest_logs(in);
}

// Proportion of records where the correct choice is the unique argmax.
// Ties count as incorrect.
inline double hard_accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::EMPTY, "no records");
    size_t correct = 0;
    for (const auto& r : records) {
        double p = r.probs[static_cast<size_t>(r.correct_index)];
        bool unique_max = true;
        for (size_t i = 0; i < r.probs.size(); ++i) {
            if (static_cast<int>(i) == r.correct_index) continue;
            if (r.probs[i] >= p) {
                unique_max = false;
                break;
            }
        }
        if (unique_max) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

// Mean probability assigned to the correct choice.
inline double soft_accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::EMPTY, "no records");
    double sum = 0;
    for (const auto& r : records) sum += r.probs[static_cast<size_t>(r.correct_index)];
    return sum / static_cast<double>(records.size());
}

// 1 - normalized entropy, with 0*log 0 = 0; clamped against float drift.
inline double confidence(const std::vector<double>& probs) {
    double h = 0;
    for (double p : probs)
        if (p > 0) h -= p * std::log(p);
    double c = 1.0 - h / std::log(static_cast<double>(probs.size()));
    if (c < 0 && c > -1e-12) c = 0;
    if (c > 1 && c < 1 + 1e-12) c = 1;
    return c;
}

inline double mean_confidence(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::EMPTY, "no records");
    double sum = 0;
    for (const auto& r : records) sum += confidence(r.probs);
    return sum / static_cast<double>(records.size());
}

// Pearson correlation of per-question confidence vs correct-choice
// probability. Either series constant -> nullopt (UNDEFINED).
inline std::optional<double> confidence_soft_correlation(
    const std::vector<EvalRecord>& records) {
    if (records.size() < 2) throw Error(ErrorCode::EMPTY_OR_SINGLETON, "need >= 2 records");
    double mx = 0, my = 0;
    size_t n = records.size();
    std::vector<double> xs(n), ys(n);
    for (size_t i = 0; i < n; ++i) {
        xs[i] = confidence(records[i].probs);
        ys[i] = records[i].probs[static_cast<size_t>(records[i].correct_index)];
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

struct MetricsReport {
    size_t n = 0;
    double hard_accuracy = 0;
    double soft_accuracy = 0;
    double mean_confidence = 0;
    std::optional<double> correlation;  // nullopt = UNDEFINED (or n < 2)
    std::map<std::string, MetricsReport> by_qtype;
    std::map<std::string, MetricsReport> by_content;
};

inline MetricsReport compute_metrics(const std::vector<EvalRecord>& records) {
    MetricsReport rep;
    rep.n = records.size();
    if (records.empty()) throw Error(ErrorCode::EMPTY, "no records");
    rep.hard_accuracy = hard_accuracy(records);
    rep.soft_accuracy = soft_accuracy(records);
    rep.mean_confidence = mean_confidence(records);
    rep.correlation =
        records.size() >= 2 ? confidence_soft_correlation(records) : std::nullopt;
    return rep;
}

// Full report plus per-qtype and per-content sub-reports.
inline MetricsReport breakdown(const std::vector<EvalRecord>& records,
                               const std::unordered_map<std::string, MCQItem>& items) {
    MetricsReport rep = compute_metrics(records);
    std::map<std::string, std::vector<EvalRecord>> by_qtype, by_content;
    for (const auto& r : records) {
        auto it = items.find(r.item_id);
        if (it == items.end()) throw Error(ErrorCode::UNKNOWN_ITEM, r.item_id);
        by_qtype[to_string(it->second.qtype)].push_back(r);
        by_content[to_string(it->second.content)].push_back(r);
    }
    for (const auto& [label, recs] : by_qtype) rep.by_qtype[label] = compute_metrics(recs);
    for (const auto& [label, recs] : by_content) rep.by_content[label] = compute_metrics(recs);
    return rep;
}

// --- Human annotations -----------------------------------------------------

struct HumanAnnotation {
    std::string item_id;
    std::string annotator;
    bool valid = false;
    bool distractive = false;
};

inline std::vector<HumanAnnotation> read_annotations(std::istream& in) {
    std::vector<HumanAnnotation> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        }
        if (!j.contains("item_id") || !j.contains("annotator") || !j.contains("valid") ||
            !j.contains("distractive"))
            throw Error(ErrorCode::MALFORMED_LINE, "line " + std::to_string(line_no));
        out.push_back({j["item_id"].get<std::string>(), j["annotator"].get<std::string>(),
                       j["valid"].get<bool>(), j["distractive"].get<bool>()});
    }
    return out;
}

struct HumanEvalSummary {
    double valid_pct = 0;       // rendered x100
    double distractive_pct = 0;
    size_t n_items = 0;
};

// Majority vote per item across annotators; exact ties resolve negative.
inline HumanEvalSummary human_eval_summary(const std::vector<HumanAnnotation>& annotations) {
    if (annotations.empty()) throw Error(ErrorCode::EMPTY, "no annotations");
    struct Tally {
        int valid_yes = 0, valid_no = 0, distractive_yes = 0, distractive_no = 0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& a : annotations) {
        Tally& t = tallies[a.item_id];
        (a.valid ? t.valid_yes : t.valid_no)++;
        (a.distractive ? t.distractive_yes : t.distractive_no)++;
    }
    size_t valid = 0, distractive = 0;
    for (const auto& [id, t] : tallies) {
        if (t.valid_yes > t.valid_no) ++valid;
        if (t.distractive_yes > t.distractive_no) ++distractive;
    }
    HumanEvalSummary s;
    s.n_items = tallies.size();
    s.valid_pct = 100.0 * static_cast<double>(valid) / static_cast<double>(tallies.size());
    s.distractive_pct =
        100.0 * static_cast<double>(distractive) / static_cast<double>(tallies.size());
    return s;
}

// --- Rendering --------------------------------------------------------------

// x100, one decimal place, half-up. The epsilon absorbs binary representation
// drift in values that are exact in decimal (0.4925 -> "49.3").
inline std::string render_scaled(double value) {
    bool negative = value < 0;
    double scaled = std::abs(value) * 1000.0;
    long long r = static_cast<long long>(std::floor(scaled + 0.5 + 1e-9));
    std::ostringstream out;
    if (negative && r != 0) out << '-';
    out << (r / 10) << "." << (r % 10);
    return out.str();
}

inline std::string render_metric(const std::optional<double>& value) {
    return value ? render_scaled(*value) : "—";  // em dash for UNDEFINED
}

enum class TableStyle { PLAIN, TSV };

inline std::string render_tables(const MetricsReport& rep, TableStyle style = TableStyle::PLAIN,
                                 const std::string& model_label = "") {
    std::string sep = style == TableStyle::TSV ? "\t" : "  ";
    std::ostringstream out;
    auto row = [&](const std::string& label, const MetricsReport& r) {
        out << label << sep << r.n << sep << render_scaled(r.hard_accuracy) << sep
            << render_scaled(r.soft_accuracy) << sep << render_scaled(r.mean_confidence) << sep
            << render_metric(r.correlation) << "\n";
    };
    out << "label" << sep << "n" << sep << "hard_acc" << sep << "soft_acc" << sep
        << "mean_conf" << sep << "correlation\n";
    row(model_label.empty() ? "overall" : model_label, rep);
    if (!rep.by_qtype.empty()) {
        out << "\n# by question type\n";
        for (const auto& [label, r] : rep.by_qtype) row(label, r);
    }
    if (!rep.by_content.empty()) {
        out << "\n# by content category\n";
        for (const auto& [label, r] : rep.by_content) row(label, r);
    }
    return out.str();
}

inline nlohmann::json report_to_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["n"] = rep.n;
    j["hard_accuracy"] = rep.hard_accuracy;
    j["soft_accuracy"] = rep.soft_accuracy;
    j["mean_confidence"] = rep.mean_confidence;
    j["correlation"] = rep.correlation ? nlohmann::json(*rep.correlation) : nlohmann::json(nullptr);
    for (const auto& [label, r] : rep.by_qtype) j["by_qtype"][label] = report_to_json(r);
    for (const auto& [label, r] : rep.by_content) j["by_content"][label] = report_to_json(r);
    return j;
}

}  // namespace farsimcq
