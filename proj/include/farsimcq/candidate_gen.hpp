#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "farsimcq/taxonomy.hpp"
#include "farsimcq/types.hpp"

namespace farsimcq {

// A declarative sentence embedding the short answer, with the answer's
// character span. Masking and the POS/context stages all key off the span.
struct AnswerSentence {
    std::string text;
    size_t span_start = 0;
    size_t span_end = 0;  // exclusive

    std::string answer_slice() const { return text.substr(span_start, span_end - span_start); }

    void validate(const std::string& answer) const {
        if (span_start > span_end || span_end > text.size() ||
            !same_normalized(answer_slice(), answer))
            throw Error(ErrorCode::ANSWER_NOT_LOCATED, "span does not cover the answer");
    }
};

struct SentenceBuilder {
    virtual ~SentenceBuilder() = default;
    virtual std::string id() const = 0;
    virtual std::string build(const std::string& question, const std::string& answer) = 0;
};

// Builds the answer sentence. With a builder, locates the answer in its
// output; without one, replaces the question's interrogative token(s) with
// the answer and strips the question mark.
inline AnswerSentence build_answer_sentence(const std::string& question,
                                            const std::string& answer,
                                            const QuestionWordLexicon& lexicon,
                                            SentenceBuilder* builder = nullptr) {
    if (normalize_text(question).empty()) throw Error(ErrorCode::EMPTY_FIELD, "question");
    std::string norm_answer = normalize_text(answer);
    if (norm_answer.empty()) throw Error(ErrorCode::EMPTY_FIELD, "answer");

    if (builder) {
        std::string text = normalize_text(builder->build(question, answer));
        size_t pos = text.find(norm_answer);
        if (pos == std::string::npos)
            throw Error(ErrorCode::ANSWER_NOT_LOCATED, builder->id());
        return AnswerSentence{text, pos, pos + norm_answer.size()};
    }

    std::vector<std::string> tokens = split_ws(normalize_text(question));
    if (!tokens.empty()) {
        std::string& last = tokens.back();
        while (!last.empty() && (last.back() == '?' || last.ends_with("\xD8\x9F")))
            last.resize(last.size() - (last.back() == '?' ? 1 : 2));
        if (last.empty()) tokens.pop_back();
    }
    auto hit = find_question_word(tokens, lexicon);
    std::vector<std::string> out_tokens;
    size_t answer_token_index = 0;
    if (hit) {
        for (size_t i = 0; i < tokens.size(); ++i) {
            if (i == hit->first) {
                answer_token_index = out_tokens.size();
                out_tokens.push_back(norm_answer);
                i += hit->second - 1;
            } else {
                out_tokens.push_back(tokens[i]);
            }
        }
    } else {
        // No interrogative found: prepend the answer.
        out_tokens.push_back(norm_answer);
        out_tokens.insert(out_tokens.end(), tokens.begin(), tokens.end());
    }
    std::string text;
    size_t start = 0;
    for (size_t i = 0; i < out_tokens.size(); ++i) {
        if (i) text += " ";
        if (i == answer_token_index) start = text.size();
        text += out_tokens[i];
    }
    return AnswerSentence{text, start, start + norm_answer.size()};
}

// Replaces the answer span with exactly one mask token occurrence.
inline std::string mask_answer(const AnswerSentence& s, const std::string& mask_token) {
    std::string out = s.text;
    out.replace(s.span_start, s.span_end - s.span_start, mask_token);
    return out;
}

struct FillMaskPrediction {
    std::string token;
    double score = 0.0;
};

struct FillMaskBackend {
    virtual ~FillMaskBackend() = default;
    virtual std::string id() const = 0;
    virtual std::string mask_token() const = 0;
    virtual bool concurrent_safe() const { return false; }
    // Predictions for the single masked slot, ordered non-increasing by score.
    virtual std::vector<FillMaskPrediction> predict(const std::string& masked, int k) = 0;
};

// Deterministic stub: always predicts from a fixed scored vocabulary,
// ignoring sentence context. Ships for tests and offline runs.
class VocabFillMask : public FillMaskBackend {
  public:
    VocabFillMask(std::string id, std::string mask,
                  std::vector<FillMaskPrediction> vocabulary)
        : id_(std::move(id)), mask_(std::move(mask)), vocab_(std::move(vocabulary)) {
        std::stable_sort(vocab_.begin(), vocab_.end(),
                         [](const auto& a, const auto& b) { return a.score > b.score; });
    }

    static VocabFillMask from_file(const std::string& id, const std::string& mask,
                                   const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open vocabulary " + path);
        std::vector<FillMaskPrediction> vocab;
        std::string word;
        double score;
        while (in >> word >> score) vocab.push_back({word, score});
        return VocabFillMask(id, mask, std::move(vocab));
    }

    std::string id() const override { return id_; }
    std::string mask_token() const override { return mask_; }
    bool concurrent_safe() const override { return true; }

    std::vector<FillMaskPrediction> predict(const std::string&, int k) override {
        std::vector<FillMaskPrediction> out(
            vocab_.begin(), vocab_.begin() + std::min<size_t>(vocab_.size(), size_t(k)));
        return out;
    }

  private:
    std::string id_;
    std::string mask_;
    std::vector<FillMaskPrediction> vocab_;
};

inline size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    size_t n = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

// Top-k fill-mask predictions as candidates; predictions equal to the answer
// (normalized) are dropped before truncation.
inline std::vector<Candidate> fillmask_candidates(FillMaskBackend& backend,
                                                  const std::string& masked,
                                                  const std::string& answer, int k) {
    if (k < 1) throw Error(ErrorCode::CONFIG_ERROR, "k must be >= 1");
    size_t masks = count_occurrences(masked, backend.mask_token());
    if (masks == 0) throw Error(ErrorCode::NO_MASK, masked);
    if (masks > 1) throw Error(ErrorCode::MULTIPLE_MASKS, masked);

    std::vector<FillMaskPrediction> preds;
    try {
        // Over-fetch so that dropping answer hits still yields k results.
        preds = backend.predict(masked, k + 4);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::BACKEND_ERROR, backend.id() + ": " + e.what());
    }
    std::string norm_answer = normalize_text(answer);
    std::vector<Candidate> out;
    for (const auto& p : preds) {
        if (static_cast<int>(out.size()) >= k) break;
        if (!std::isfinite(p.score))
            throw Error(ErrorCode::BACKEND_ERROR, backend.id() + ": non-finite score");
        std::string norm = normalize_text(p.token);
        if (norm.empty() || norm == norm_answer) continue;
        Candidate c;
        c.surface = p.token;
        c.provenance = {ProvenanceKind::FILL_MASK, backend.id()};
        c.generator_score = p.score;
        out.push_back(std::move(c));
    }
    return out;
}

// --- Static word-vector candidates ----------------------------------------

struct WordVectorTable {
    std::string embedding_id;
    size_t dim = 0;
    std::vector<std::string> words;               // original surfaces
    std::vector<std::vector<double>> vectors;     // parallel to words
    std::unordered_map<std::string, size_t> index;  // normalized word -> row

    // Text format: optional "count dim" header, then "word v1 ... vdim".
    static WordVectorTable load(const std::string& embedding_id, const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open vectors " + path);
        return parse(embedding_id, in);
    }

    static WordVectorTable parse(const std::string& embedding_id, std::istream& in) {
        WordVectorTable table;
        table.embedding_id = embedding_id;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            if (first) {
                first = false;
                // Header detection: exactly two integer fields.
                std::istringstream probe(line);
                long count, d;
                std::string extra;
                if (probe >> count >> d && !(probe >> extra) && count > 0 && d > 0) {
                    table.dim = static_cast<size_t>(d);
                    continue;
                }
            }
            std::string word;
            if (!(ls >> word)) throw Error(ErrorCode::MALFORMED_LINE, line);
            std::vector<double> vec;
            double v;
            while (ls >> v) vec.push_back(v);
            if (vec.empty()) throw Error(ErrorCode::MALFORMED_LINE, line);
            if (table.dim == 0) table.dim = vec.size();
            if (vec.size() != table.dim)
                throw Error(ErrorCode::MALFORMED_LINE, "dim mismatch: " + line);
            std::string norm = normalize_text(word);
            if (table.index.count(norm))
                throw Error(ErrorCode::INVARIANT_VIOLATION, "duplicate word " + norm);
            table.index[norm] = table.words.size();
            table.words.push_back(word);
            table.vectors.push_back(std::move(vec));
        }
        return table;
    }

    std::optional<size_t> find(const std::string& surface) const {
        auto it = index.find(normalize_text(surface));
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// k nearest table entries to the answer by cosine similarity, excluding the
// answer itself. Answer OOV -> empty (backend skipped by contract).
inline std::vector<Candidate> embedding_candidates(const WordVectorTable& table,
                                                   const std::string& answer, int k) {
    if (k < 1) throw Error(ErrorCode::CONFIG_ERROR, "k must be >= 1");
    auto row = table.find(answer);
    if (!row) return {};
    const auto& anchor = table.vectors[*row];

    std::vector<std::pair<double, size_t>> scored;
    for (size_t i = 0; i < table.vectors.size(); ++i) {
        if (i == *row) continue;
        scored.emplace_back(cosine(anchor, table.vectors[i]), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return table.words[a.second] < table.words[b.second];
    });
    std::vector<Candidate> out;
    for (const auto& [score, i] : scored) {
        if (static_cast<int>(out.size()) >= k) break;
        Candidate c;
        c.surface = table.words[i];
        c.provenance = {ProvenanceKind::STATIC_EMBEDDING, table.embedding_id};
        c.generator_score = score;
        out.push_back(std::move(c));
    }
    return out;
}

// Concatenates candidate lists, dedupes under normalize_text keeping the
// highest-scored occurrence per provenance class, removes the answer, and
// orders fill-mask before embedding, each by descending score then surface.
inline std::vector<Candidate> merge_pool(const std::vector<std::vector<Candidate>>& lists,
                                         const std::string& answer) {
    std::string norm_answer = normalize_text(answer);
    // Best candidate per (normalized surface, provenance kind).
    std::map<std::pair<std::string, ProvenanceKind>, Candidate> best;
    for (const auto& list : lists)
        for (const auto& c : list) {
            std::string norm = normalize_text(c.surface);
            if (norm.empty() || norm == norm_answer) continue;
            auto key = std::make_pair(norm, c.provenance.kind);
            auto it = best.find(key);
            if (it == best.end() || c.generator_score > it->second.generator_score)
                best[key] = c;
        }
    // A surface seen under both provenance classes keeps its fill-mask entry.
    std::vector<Candidate> out;
    for (auto& [key, c] : best) {
        if (key.second == ProvenanceKind::STATIC_EMBEDDING &&
            best.count({key.first, ProvenanceKind::FILL_MASK}))
            continue;
        out.push_back(c);
    }
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.provenance.kind != b.provenance.kind)
            return a.provenance.kind == ProvenanceKind::FILL_MASK;
        if (a.generator_score != b.generator_score) return a.generator_score > b.generator_score;
        return a.surface < b.surface;
    });
    return out;
}

}  // namespace farsimcq
