#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "farsimcq/candidate_gen.hpp"
#include "farsimcq/dataset.hpp"
#include "farsimcq/eval.hpp"
#include "farsimcq/filter_stack.hpp"
#include "farsimcq/kg_embed.hpp"
#include "farsimcq/question_gen.hpp"
#include "farsimcq/rank_select.hpp"
#include "farsimcq/taxonomy.hpp"

namespace farsimcq {

// Aggregated run bookkeeping, written alongside the output dataset.
struct RunManifest {
    nlohmann::json config_snapshot;
    std::string input_path, output_path;
    size_t records_in = 0;
    size_t items_out = 0;
    size_t items_skipped = 0;       // per-item errors (isolated)
    size_t items_incomplete = 0;    // < distractor_count survivors
    size_t items_dropped_incomplete = 0;
    size_t pool_candidates = 0;     // filter-stage input
    size_t filter_survivors = 0;    // filter-stage output
    size_t filter_rejected = 0;     // audit-trail rejections
    size_t relaxations = 0;
    double wall_seconds = 0;
    uint64_t seed = 0;

    // stage_out + stage_rejected = stage_in for the filter stage.
    bool counts_reconcile() const {
        return pool_candidates == filter_survivors + filter_rejected;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config"] = config_snapshot;
        j["input"] = input_path;
        j["output"] = output_path;
        j["records_in"] = records_in;
        j["items_out"] = items_out;
        j["items_skipped"] = items_skipped;
        j["items_incomplete"] = items_incomplete;
        j["items_dropped_incomplete"] = items_dropped_incomplete;
        j["pool_candidates"] = pool_candidates;
        j["filter_survivors"] = filter_survivors;
        j["filter_rejected"] = filter_rejected;
        j["relaxations"] = relaxations;
        j["wall_seconds"] = wall_seconds;
        j["seed"] = seed;
        return j;
    }
};

// All pluggable pieces for a generate run. Raw pointers are non-owning;
// nullptr disables the corresponding score or stage.
struct GenerateContext {
    PipelineConfig config;
    QGBackend* qg = nullptr;
    bool bypass_question = false;  // use rec.question when present
    SentenceBuilder* sentence_builder = nullptr;
    std::vector<FillMaskBackend*> fillmask_backends;
    std::vector<const WordVectorTable*> vector_tables;
    Tagger* tagger = nullptr;
    EntityRecognizer* ner = nullptr;
    ContextEncoder* encoder = nullptr;
    const TripleStore* kg_store = nullptr;
    const ComplexEmbedding* kg_embedding = nullptr;
    const QuestionWordLexicon* lexicon = nullptr;
    bool keep_incomplete = false;
    bool fail_fast = false;
    int workers = 1;
    std::ostream* audit_log = nullptr;
};

struct ItemOutcome {
    std::optional<MCQItem> item;
    bool incomplete = false;
    bool relaxed = false;
    size_t pool_size = 0;
    size_t survivors = 0;
    size_t rejected = 0;
    std::vector<nlohmann::json> audit_lines;
    std::string error;  // non-empty when the item was skipped
};

// Runs one record through question-gen -> candidate-gen -> filter-stack ->
// rank-select -> assemble.
inline ItemOutcome process_record(const QARecord& rec, const GenerateContext& ctx) {
    ItemOutcome out;
    const QuestionWordLexicon& lexicon =
        ctx.lexicon ? *ctx.lexicon : QuestionWordLexicon::english_default();

    std::string question;
    if (ctx.bypass_question && !normalize_text(rec.question).empty()) {
        question = rec.question;
    } else if (ctx.qg) {
        question = generate_question(*ctx.qg, rec);
    } else if (!normalize_text(rec.question).empty()) {
        question = rec.question;
    } else {
        throw Error(ErrorCode::CONFIG_ERROR, "no question source for " + rec.id);
    }

    AnswerSentence sentence =
        build_answer_sentence(question, rec.answer, lexicon, ctx.sentence_builder);

    std::vector<std::vector<Candidate>> lists;
    for (FillMaskBackend* backend : ctx.fillmask_backends) {
        std::string masked = mask_answer(sentence, backend->mask_token());
        lists.push_back(
            fillmask_candidates(*backend, masked, rec.answer, ctx.config.fillmask_top_k));
    }
    for (const WordVectorTable* table : ctx.vector_tables)
        lists.push_back(embedding_candidates(*table, rec.answer, ctx.config.embedding_top_k));
    std::vector<Candidate> pool = merge_pool(lists, rec.answer);
    out.pool_size = pool.size();

    FilterResult filtered;
    if (ctx.tagger && ctx.ner) {
        AnswerProfile profile = profile_answer(sentence, *ctx.tagger, *ctx.ner);
        FilterConfig fcfg;
        fcfg.distractor_count = ctx.config.distractor_count;
        fcfg.relaxation_policy = ctx.config.relaxation_policy;
        filtered = run_filters(pool, sentence, profile, *ctx.tagger, *ctx.ner, rec.answer, fcfg);
    } else {
        filtered.survivors = dedupe_pass(std::move(pool), rec.answer, &filtered.rejected);
    }
    out.survivors = filtered.survivors.size();
    out.rejected = filtered.rejected.size();
    out.relaxed = filtered.relaxed;

    // Per-question per-feature scoring and fusion.
    std::vector<std::optional<double>> kg_raw(filtered.survivors.size());
    std::vector<std::optional<double>> ctx_raw(filtered.survivors.size());
    for (size_t i = 0; i < filtered.survivors.size(); ++i) {
        const std::string& surface = filtered.survivors[i].surface;
        if (ctx.kg_store && ctx.kg_embedding) {
            auto answer_node = link_entity(*ctx.kg_store, rec.answer);
            auto cand_node = link_entity(*ctx.kg_store, surface);
            if (answer_node && cand_node)
                kg_raw[i] = entity_similarity(*ctx.kg_embedding, *ctx.kg_store, *answer_node,
                                              *cand_node);
        }
        if (ctx.encoder)
            ctx_raw[i] = context_similarity(*ctx.encoder, sentence, rec.answer, surface);
    }
    auto kg_norm = minmax_normalize(kg_raw);
    auto ctx_norm = minmax_normalize(ctx_raw);
    std::vector<Candidate> scored;
    for (size_t i = 0; i < filtered.survivors.size(); ++i) {
        Candidate c = filtered.survivors[i];
        c.kg_score = kg_norm[i];
        c.context_score = ctx_norm[i];
        if (kg_norm[i] || ctx_norm[i])
            c.fused_score = fuse_scores(kg_norm[i], ctx_norm[i], ctx.config.w_kg, ctx.config.w_ctx);
        scored.push_back(std::move(c));
    }
    // With neither scoring source configured, generator order decides.
    std::vector<RankedCandidate> top = select_top(scored, ctx.config.distractor_count);

    for (const auto& rc : top) out.audit_lines.push_back(candidate_audit_json(rec.id, rc.candidate));
    for (const auto& c : filtered.rejected) out.audit_lines.push_back(candidate_audit_json(rec.id, c));

    if (top.empty()) throw Error(ErrorCode::EMPTY_TOP, rec.id);
    MCQItem item = assemble_mcq(rec, question, top, ctx.config);
    item.qtype = classify_type(question, lexicon);
    if (filtered.relaxed) item.flags.push_back(MCQFlag::FILTER_RELAXED);
    out.incomplete = item.has_flag(MCQFlag::INCOMPLETE_DISTRACTORS);
    out.item = std::move(item);
    return out;
}

// Worker-pool over items; results re-sequenced by input order before writing.
inline RunManifest cmd_generate(const std::vector<QARecord>& records,
                                const GenerateContext& ctx, std::vector<MCQItem>& items_out) {
    ctx.config.validate();
    auto t0 = std::chrono::steady_clock::now();

    std::vector<ItemOutcome> outcomes(records.size());
    bool serialize_backends = false;
    for (FillMaskBackend* b : ctx.fillmask_backends)
        if (b && !b->concurrent_safe()) serialize_backends = true;
    if (ctx.qg && !ctx.qg->concurrent_safe()) serialize_backends = true;

    int workers = serialize_backends ? 1 : std::max(1, ctx.workers);
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::string first_error;
    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= records.size()) break;
            try {
                outcomes[i] = process_record(records[i], ctx);
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
                if (ctx.fail_fast) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error.empty()) first_error = e.what();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (ctx.fail_fast && !first_error.empty())
        throw Error(ErrorCode::BACKEND_ERROR, first_error);

    RunManifest manifest;
    manifest.records_in = records.size();
    for (auto& o : outcomes) {
        manifest.pool_candidates += o.pool_size;
        manifest.filter_survivors += o.survivors;
        manifest.filter_rejected += o.rejected;
        if (o.relaxed) ++manifest.relaxations;
        if (!o.error.empty()) {
            ++manifest.items_skipped;
            continue;
        }
        if (ctx.audit_log)
            for (const auto& line : o.audit_lines) (*ctx.audit_log) << line.dump() << '\n';
        if (o.incomplete) {
            ++manifest.items_incomplete;
            if (!ctx.keep_incomplete) {
                ++manifest.items_dropped_incomplete;
                continue;
            }
        }
        items_out.push_back(std::move(*o.item));
        ++manifest.items_out;
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return manifest;
}

inline RunManifest cmd_train_kg(const TripleStore& store, const TrainConfig& cfg,
                                const std::string& out_path) {
    auto t0 = std::chrono::steady_clock::now();
    ComplexEmbedding emb = train(store, cfg);
    save_embedding(emb, out_path);
    RunManifest manifest;
    manifest.output_path = out_path;
    manifest.records_in = store.triples.size();
    manifest.items_out = store.entity_count();
    manifest.seed = cfg.seed;
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return manifest;
}

struct CategorizeResult {
    std::vector<MCQItem> items;
    DistributionReport report;
    size_t content_classified = 0;
};

// Fills qtype always; content only when a client is configured.
inline CategorizeResult cmd_categorize(std::vector<MCQItem> items,
                                       const QuestionWordLexicon& lexicon,
                                       LLMClient* client = nullptr,
                                       const std::string& prompt_template = "") {
    CategorizeResult result;
    std::string prompt = prompt_template.empty() ? default_content_prompt() : prompt_template;
    for (auto& item : items) {
        item.qtype = classify_type(item.question, lexicon);
        if (client) {
            item.content = classify_content(item, *client, prompt);
            ++result.content_classified;
        }
    }
    result.report = distribution_report(items);
    result.items = std::move(items);
    return result;
}

struct EvaluateResult {
    MetricsReport report;
    std::string rendered_plain;
    std::string rendered_tsv;
};

inline EvaluateResult cmd_evaluate(const std::vector<EvalRecord>& records,
                                   const std::vector<MCQItem>& dataset) {
    if (records.empty()) throw Error(ErrorCode::EMPTY, "no eval records");
    std::unordered_map<std::string, MCQItem> by_id;
    for (const auto& item : dataset) by_id[item.id] = item;
    EvaluateResult result;
    result.report = breakdown(records, by_id);
    result.rendered_plain = render_tables(result.report, TableStyle::PLAIN);
    result.rendered_tsv = render_tables(result.report, TableStyle::TSV);
    return result;
}

}  // namespace farsimcq
