#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "farsimcq/candidate_gen.hpp"
#include "farsimcq/types.hpp"

namespace farsimcq {

// Contextual encoder contract: the target span's hidden vector taken from
// the second encoder-layer output (multi-token targets: mean of token
// vectors). Adapters own the layer extraction; this library only consumes
// the vector.
struct ContextEncoder {
    virtual ~ContextEncoder() = default;
    virtual std::string id() const = 0;
    virtual size_t dim() const = 0;
    virtual std::vector<double> embed(const std::string& sentence, size_t span_start,
                                      size_t span_end) = 0;
};

// Deterministic stub encoder: each token hashes to a fixed pseudo-random
// unit-ish vector; span vectors are token means. No semantics, but stable
// across runs and platforms.
class HashEncoder : public ContextEncoder {
  public:
    explicit HashEncoder(size_t dim = 16, uint64_t salt = 0x9E3779B97F4A7C15ull)
        : dim_(dim), salt_(salt) {}

    std::string id() const override { return "hash-encoder"; }
    size_t dim() const override { return dim_; }

    std::vector<double> embed(const std::string& sentence, size_t span_start,
                              size_t span_end) override {
        if (span_start > span_end || span_end > sentence.size())
            throw Error(ErrorCode::ENCODER_ERROR, "span out of range");
        std::string target = sentence.substr(span_start, span_end - span_start);
        auto tokens = split_ws(normalize_text(target));
        if (tokens.empty()) tokens.push_back("");
        std::vector<double> mean(dim_, 0.0);
        for (const auto& tok : tokens) {
            std::mt19937_64 rng(stable_hash(tok) ^ salt_);
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (size_t k = 0; k < dim_; ++k) mean[k] += dist(rng);
        }
        for (double& x : mean) x /= static_cast<double>(tokens.size());
        return mean;
    }

  private:
    size_t dim_;
    uint64_t salt_;
};

// Cosine between the answer embedded in s and the candidate substituted at
// the answer span.
inline double context_similarity(ContextEncoder& enc, const AnswerSentence& s,
                                 const std::string& answer, const std::string& cand) {
    s.validate(answer);
    std::vector<double> va, vc;
    try {
        va = enc.embed(s.text, s.span_start, s.span_end);
        std::string substituted = s.text;
        substituted.replace(s.span_start, s.span_end - s.span_start, cand);
        vc = enc.embed(substituted, s.span_start, s.span_start + cand.size());
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::ENCODER_ERROR, enc.id() + ": " + e.what());
    }
    if (va.size() != vc.size() || va.empty())
        throw Error(ErrorCode::ENCODER_ERROR, enc.id() + ": dimension mismatch");
    return cosine(va, vc);
}

// (x - min) / (max - min); degenerate (max == min, incl. singleton) -> all
// 0.5. MISSING entries pass through as MISSING.
inline std::vector<std::optional<double>> minmax_normalize(
    const std::vector<std::optional<double>>& xs) {
    double lo = 0, hi = 0;
    bool any = false;
    for (const auto& x : xs) {
        if (!x) continue;
        if (!std::isfinite(*x)) throw Error(ErrorCode::INVARIANT_VIOLATION, "non-finite score");
        if (!any) {
            lo = hi = *x;
            any = true;
        } else {
            lo = std::min(lo, *x);
            hi = std::max(hi, *x);
        }
    }
    std::vector<std::optional<double>> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!xs[i]) continue;
        out[i] = (hi > lo) ? (*xs[i] - lo) / (hi - lo) : 0.5;
    }
    return out;
}

// Weighted fusion of normalized scores; one side MISSING -> the other alone.
inline double fuse_scores(std::optional<double> kg_norm, std::optional<double> ctx_norm,
                          double w_kg = 0.5, double w_ctx = 0.5) {
    if (!kg_norm && !ctx_norm) throw Error(ErrorCode::BOTH_MISSING, "no scores to fuse");
    if (std::abs(w_kg + w_ctx - 1.0) > 1e-9)
        throw Error(ErrorCode::CONFIG_ERROR, "fusion weights must sum to 1");
    if (!kg_norm) return *ctx_norm;
    if (!ctx_norm) return *kg_norm;
    return w_kg * *kg_norm + w_ctx * *ctx_norm;
}

struct RankedCandidate {
    Candidate candidate;
    size_t rank = 0;  // 1-based
};

// Total order used by selection: higher fused score, then FILL_MASK before
// STATIC_EMBEDDING, then higher generator score, then lexicographic surface.
inline bool selection_less(const Candidate& a, const Candidate& b) {
    double fa = a.fused_score.value_or(0.0), fb = b.fused_score.value_or(0.0);
    if (fa != fb) return fa > fb;
    if (a.provenance.kind != b.provenance.kind)
        return a.provenance.kind == ProvenanceKind::FILL_MASK;
    if (a.generator_score != b.generator_score) return a.generator_score > b.generator_score;
    return a.surface < b.surface;
}

inline std::vector<RankedCandidate> select_top(std::vector<Candidate> cands, int n) {
    if (n < 1) throw Error(ErrorCode::CONFIG_ERROR, "n must be >= 1");
    std::stable_sort(cands.begin(), cands.end(), selection_less);
    std::vector<RankedCandidate> out;
    for (size_t i = 0; i < cands.size() && static_cast<int>(i) < n; ++i)
        out.push_back({cands[i], i + 1});
    return out;
}

// Deterministic Fisher-Yates so that output does not depend on the standard
// library's std::shuffle implementation.
inline void seeded_shuffle(std::vector<std::string>& items, uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (size_t i = items.size(); i > 1; --i) {
        std::uniform_int_distribution<size_t> dist(0, i - 1);
        std::swap(items[i - 1], items[dist(rng)]);
    }
}

inline uint64_t shuffle_seed_for(const PipelineConfig& cfg, const std::string& item_id) {
    return cfg.shuffle_seed_scope == SeedScope::PER_ITEM_ID ? stable_hash(item_id)
                                                            : cfg.global_seed;
}

// Builds the final item: seeded shuffle of [answer] + distractor surfaces,
// correct_index located afterwards by normalized match.
inline MCQItem assemble_mcq(const QARecord& rec, const std::string& question,
                            const std::vector<RankedCandidate>& top,
                            const PipelineConfig& cfg) {
    if (top.empty()) throw Error(ErrorCode::EMPTY_TOP, rec.id);
    if (static_cast<int>(top.size()) > cfg.distractor_count)
        throw Error(ErrorCode::INVARIANT_VIOLATION, rec.id + ": too many distractors");

    std::vector<std::string> choices;
    choices.push_back(normalize_text(rec.answer));
    for (const auto& rc : top) choices.push_back(rc.candidate.surface);
    seeded_shuffle(choices, shuffle_seed_for(cfg, rec.id));

    MCQItem item;
    item.id = rec.id;
    item.question = question;
    item.choices = choices;
    std::string norm_answer = normalize_text(rec.answer);
    for (size_t i = 0; i < choices.size(); ++i)
        if (normalize_text(choices[i]) == norm_answer) item.correct_index = static_cast<int>(i);
    if (static_cast<int>(top.size()) < cfg.distractor_count)
        item.flags.push_back(MCQFlag::INCOMPLETE_DISTRACTORS);
    return item;
}

}  // namespace farsimcq
