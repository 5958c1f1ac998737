// farsimcq: multiple-choice question generation and evaluation toolchain.
//
// Subcommands: generate, train-kg, categorize, evaluate, report.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "farsimcq/backends.hpp"
#include "farsimcq/dataset.hpp"
#include "farsimcq/pipeline.hpp"

using json = nlohmann::json;
using namespace farsimcq;

namespace {

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::CONFIG_ERROR:
            return 1;
        case ErrorCode::BACKEND_ERROR:
        case ErrorCode::CLIENT_ERROR:
        case ErrorCode::ENCODER_ERROR:
        case ErrorCode::TAGGER_ERROR:
        case ErrorCode::NER_ERROR:
            return 3;
        default:
            return 2;
    }
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::CONFIG_ERROR, "cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::CONFIG_ERROR, std::string("config: ") + e.what());
    }
}

// Owns every backend built from the config so that GenerateContext's
// non-owning pointers stay valid for the run.
struct BackendSet {
    std::unique_ptr<QGBackend> qg;
    std::vector<std::unique_ptr<FillMaskBackend>> fillmask;
    std::vector<WordVectorTable> tables;
    std::unique_ptr<Tagger> tagger;
    std::unique_ptr<EntityRecognizer> ner;
    std::unique_ptr<ContextEncoder> encoder;
    std::optional<TripleStore> kg_store;
    std::optional<ComplexEmbedding> kg_embedding;
    std::optional<QuestionWordLexicon> lexicon;
};

PipelineConfig pipeline_config_from(const json& cfg) {
    PipelineConfig pc;
    if (!cfg.contains("pipeline")) return pc;
    const json& p = cfg["pipeline"];
    if (p.contains("fillmask_top_k")) pc.fillmask_top_k = p["fillmask_top_k"].get<int>();
    if (p.contains("embedding_top_k")) pc.embedding_top_k = p["embedding_top_k"].get<int>();
    if (p.contains("distractor_count")) pc.distractor_count = p["distractor_count"].get<int>();
    if (p.contains("w_kg")) pc.w_kg = p["w_kg"].get<double>();
    if (p.contains("w_ctx")) pc.w_ctx = p["w_ctx"].get<double>();
    if (p.contains("seed_scope") && p["seed_scope"].get<std::string>() == "global")
        pc.shuffle_seed_scope = SeedScope::GLOBAL;
    if (p.contains("global_seed")) pc.global_seed = p["global_seed"].get<uint64_t>();
    if (p.contains("relaxation_policy")) {
        pc.relaxation_policy.clear();
        for (const auto& s : p["relaxation_policy"]) {
            std::string name = s.get<std::string>();
            if (name == "POS") pc.relaxation_policy.push_back(FilterStage::POS);
            else if (name == "NER") pc.relaxation_policy.push_back(FilterStage::NER);
            else throw Error(ErrorCode::CONFIG_ERROR, "bad relaxation stage " + name);
        }
    }
    return pc;
}

ExternalTransport transport_from(const json& j) {
    ExternalTransport t;
    t.target = j.at("target").get<std::string>();
    if (j.contains("max_attempts")) t.max_attempts = j["max_attempts"].get<int>();
    if (j.contains("backoff_ms")) t.backoff_ms = j["backoff_ms"].get<int>();
    return t;
}

BackendSet build_backends(const json& cfg) {
    BackendSet set;
    if (cfg.contains("qgen")) {
        const json& q = cfg["qgen"];
        std::string kind = q.value("backend", "template");
        if (kind == "template") set.qg = std::make_unique<TemplateQGBackend>();
        else if (kind == "external")
            set.qg = std::make_unique<ExternalQGBackend>(transport_from(q));
        else if (kind != "bypass")
            throw Error(ErrorCode::CONFIG_ERROR, "unknown qgen backend " + kind);
    } else {
        set.qg = std::make_unique<TemplateQGBackend>();
    }
    if (cfg.contains("fillmask"))
        for (const auto& f : cfg["fillmask"]) {
            std::string type = f.value("type", "vocab");
            std::string id = f.value("id", type);
            std::string mask = f.value("mask", "<MASK>");
            if (type == "vocab")
                set.fillmask.push_back(std::make_unique<VocabFillMask>(
                    VocabFillMask::from_file(id, mask, f.at("path").get<std::string>())));
            else if (type == "external")
                set.fillmask.push_back(
                    std::make_unique<ExternalFillMask>(transport_from(f), id, mask));
            else
                throw Error(ErrorCode::CONFIG_ERROR, "unknown fillmask type " + type);
        }
    if (cfg.contains("embeddings"))
        for (const auto& e : cfg["embeddings"])
            set.tables.push_back(WordVectorTable::load(e.value("id", "embedding"),
                                                       e.at("path").get<std::string>()));
    if (cfg.contains("tagger")) {
        const json& t = cfg["tagger"];
        std::string type = t.value("type", "lexicon");
        if (type == "lexicon")
            set.tagger = std::make_unique<LexiconTagger>(
                LexiconTagger::from_file(t.at("path").get<std::string>()));
        else if (type == "external")
            set.tagger = std::make_unique<ExternalTagger>(transport_from(t));
        else
            throw Error(ErrorCode::CONFIG_ERROR, "unknown tagger type " + type);
    }
    if (cfg.contains("ner")) {
        const json& n = cfg["ner"];
        std::string type = n.value("type", "lexicon");
        if (type == "lexicon")
            set.ner = std::make_unique<LexiconRecognizer>(
                LexiconRecognizer::from_file(n.at("path").get<std::string>()));
        else if (type == "external") {
            std::vector<std::string> labels;
            if (n.contains("labels"))
                for (const auto& l : n["labels"]) labels.push_back(l.get<std::string>());
            set.ner = std::make_unique<ExternalRecognizer>(transport_from(n), labels);
        } else {
            throw Error(ErrorCode::CONFIG_ERROR, "unknown ner type " + type);
        }
    }
    if (cfg.contains("encoder")) {
        const json& e = cfg["encoder"];
        std::string type = e.value("type", "hash");
        if (type == "hash")
            set.encoder = std::make_unique<HashEncoder>(e.value("dim", 16));
        else if (type == "external")
            set.encoder = std::make_unique<ExternalEncoder>(transport_from(e),
                                                            e.at("dim").get<size_t>());
        else
            throw Error(ErrorCode::CONFIG_ERROR, "unknown encoder type " + type);
    } else {
        set.encoder = std::make_unique<HashEncoder>();
    }
    if (cfg.contains("kg")) {
        set.kg_store = TripleStore::load(cfg["kg"].at("triples").get<std::string>());
        set.kg_embedding = load_embedding(cfg["kg"].at("embedding").get<std::string>());
    }
    if (cfg.contains("lexicon"))
        set.lexicon = QuestionWordLexicon::load(cfg["lexicon"].get<std::string>());
    return set;
}

int run_generate(const json& cfg, const std::string& in_path, const std::string& out_path,
                 bool bypass, bool keep_incomplete, bool fail_fast, int workers,
                 const std::string& audit_path) {
    BackendSet backends = build_backends(cfg);
    GenerateContext ctx;
    ctx.config = pipeline_config_from(cfg);
    ctx.qg = backends.qg.get();
    ctx.bypass_question = bypass || (cfg.contains("qgen") &&
                                     cfg["qgen"].value("backend", "") == "bypass");
    for (auto& b : backends.fillmask) ctx.fillmask_backends.push_back(b.get());
    for (auto& t : backends.tables) ctx.vector_tables.push_back(&t);
    ctx.tagger = backends.tagger.get();
    ctx.ner = backends.ner.get();
    ctx.encoder = backends.encoder.get();
    if (backends.kg_store) {
        ctx.kg_store = &*backends.kg_store;
        ctx.kg_embedding = &*backends.kg_embedding;
    }
    if (backends.lexicon) ctx.lexicon = &*backends.lexicon;
    ctx.keep_incomplete = keep_incomplete;
    ctx.fail_fast = fail_fast;
    ctx.workers = workers;

    std::ofstream audit;
    if (!audit_path.empty()) {
        audit.open(audit_path);
        if (!audit) throw Error(ErrorCode::IO_ERROR, "cannot open " + audit_path);
        ctx.audit_log = &audit;
    }

    std::vector<QARecord> records = read_dataset(in_path);
    std::vector<MCQItem> items;
    RunManifest manifest = cmd_generate(records, ctx, items);
    manifest.input_path = in_path;
    manifest.output_path = out_path;
    manifest.config_snapshot = cfg;
    write_mcq_dataset(items, out_path, keep_incomplete);
    std::ofstream mf(out_path + ".manifest.json");
    mf << manifest.to_json().dump(2) << '\n';
    std::cerr << "generate: " << manifest.items_out << "/" << manifest.records_in
              << " items written, " << manifest.items_skipped << " skipped\n";
    return 0;
}

int run_train_kg(const std::string& triples_path, const std::string& out_path,
                 const TrainConfig& tcfg) {
    TripleStore store = TripleStore::load(triples_path);
    RunManifest manifest = cmd_train_kg(store, tcfg, out_path);
    std::cerr << "train-kg: " << store.triples.size() << " triples, "
              << store.entity_count() << " entities -> " << out_path << " ("
              << manifest.wall_seconds << "s)\n";
    return 0;
}

int run_categorize(const json& cfg, const std::string& in_path, const std::string& out_path,
                   const std::string& lexicon_path, bool use_llm,
                   const std::string& audit_path) {
    QuestionWordLexicon lexicon = lexicon_path.empty()
                                      ? QuestionWordLexicon::english_default()
                                      : QuestionWordLexicon::load(lexicon_path);
    std::vector<MCQItem> items = read_mcq_dataset(in_path);

    std::unique_ptr<ExternalLLMClient> client;
    std::string prompt_template;
    if (use_llm) {
        if (cfg.contains("llm") && cfg["llm"].contains("target")) {
            ExternalTransport t = transport_from(cfg["llm"]);
            if (const char* key = std::getenv("FARSIMCQ_LLM_KEY")) t.bearer_token = key;
            client = std::make_unique<ExternalLLMClient>(std::move(t), "config-llm", audit_path);
        } else {
            client = std::make_unique<ExternalLLMClient>(ExternalLLMClient::from_env(audit_path));
        }
        if (cfg.contains("llm") && cfg["llm"].contains("prompt_file")) {
            std::ifstream pf(cfg["llm"]["prompt_file"].get<std::string>());
            prompt_template.assign(std::istreambuf_iterator<char>(pf),
                                   std::istreambuf_iterator<char>());
        }
    }
    CategorizeResult result = cmd_categorize(std::move(items), lexicon, client.get(),
                                             prompt_template);
    write_mcq_dataset(result.items, out_path, /*allow_incomplete=*/true);
    std::cout << render_distribution(result.report);
    return 0;
}

int run_evaluate(const std::string& logs_path, const std::string& dataset_path,
                 const std::string& out_prefix) {
    std::vector<EvalRecord> records = ingest_logs(logs_path);
    std::vector<MCQItem> dataset = read_mcq_dataset(dataset_path);
    EvaluateResult result = cmd_evaluate(records, dataset);
    std::cout << result.rendered_plain;
    if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".txt") << result.rendered_plain;
        std::ofstream(out_prefix + ".tsv") << result.rendered_tsv;
        std::ofstream(out_prefix + ".json") << report_to_json(result.report).dump(2) << '\n';
    }
    return 0;
}

int run_report(const std::string& dataset_path, const std::string& annotations_path) {
    std::vector<MCQItem> items = read_mcq_dataset(dataset_path);
    std::cout << render_distribution(distribution_report(items));
    if (!annotations_path.empty()) {
        std::ifstream in(annotations_path);
        if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open " + annotations_path);
        HumanEvalSummary s = human_eval_summary(read_annotations(in));
        std::cout << "human eval (n=" << s.n_items << "): valid "
                  << render_scaled(s.valid_pct / 100.0) << "%, distractive "
                  << render_scaled(s.distractive_pct / 100.0) << "%\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MCQ generation and evaluation pipeline"};
    app.require_subcommand(1);

    std::string config_path, audit_path;
    uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
    bool fail_fast = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "global seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--workers", workers, "worker threads");
    app.add_flag("--fail-fast", fail_fast, "abort on first per-item error");
    app.add_option("--audit-log", audit_path, "candidate/LLM audit log path");

    auto* gen = app.add_subcommand("generate", "run the full MCQ pipeline");
    std::string gen_in, gen_out;
    bool bypass = false, keep_incomplete = false;
    gen->add_option("--in", gen_in, "QA dataset (jsonl)")->required();
    gen->add_option("--out", gen_out, "MCQ output (jsonl)")->required();
    gen->add_flag("--bypass-question", bypass, "use input questions when present");
    gen->add_flag("--keep-incomplete", keep_incomplete,
                  "emit items with fewer than the configured distractors");

    auto* tkg = app.add_subcommand("train-kg", "train ComplEx embeddings on a triple file");
    std::string triples_path, emb_out;
    TrainConfig tcfg;
    tkg->add_option("--triples", triples_path, "triple file (tsv)")->required();
    tkg->add_option("--out", emb_out, "embedding output path")->required();
    tkg->add_option("--dim", tcfg.dim, "embedding dimension");
    tkg->add_option("--epochs", tcfg.epochs, "training epochs");
    tkg->add_option("--lr", tcfg.learning_rate, "learning rate");
    tkg->add_option("--negatives", tcfg.negatives_per_positive, "negatives per positive");
    tkg->add_option("--l2", tcfg.l2_lambda, "L2 regularization");

    auto* cat = app.add_subcommand("categorize", "fill qtype/content labels");
    std::string cat_in, cat_out, lexicon_path;
    bool use_llm = false;
    cat->add_option("--in", cat_in, "MCQ dataset (jsonl)")->required();
    cat->add_option("--out", cat_out, "annotated output (jsonl)")->required();
    cat->add_option("--lexicon", lexicon_path, "question-word lexicon (tsv)");
    cat->add_flag("--llm", use_llm, "classify content via the configured LLM client");

    auto* ev = app.add_subcommand("evaluate", "score probability logs with the six metrics");
    std::string logs_path, ds_path, out_prefix;
    ev->add_option("--logs", logs_path, "eval log (jsonl)")->required();
    ev->add_option("--dataset", ds_path, "MCQ dataset (jsonl)")->required();
    ev->add_option("--out", out_prefix, "output prefix (.txt/.tsv/.json)");

    auto* rep = app.add_subcommand("report", "distribution and human-eval report");
    std::string rep_dataset, rep_annotations;
    rep->add_option("--dataset", rep_dataset, "MCQ dataset (jsonl)")->required();
    rep->add_option("--annotations", rep_annotations, "human annotations (jsonl)");

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = load_config(config_path);
        if (seed_set) {
            cfg["pipeline"]["seed_scope"] = "global";
            cfg["pipeline"]["global_seed"] = seed;
            tcfg.seed = seed;
        }
        if (gen->parsed())
            return run_generate(cfg, gen_in, gen_out, bypass, keep_incomplete, fail_fast,
                                workers, audit_path);
        if (tkg->parsed()) return run_train_kg(triples_path, emb_out, tcfg);
        if (cat->parsed())
            return run_categorize(cfg, cat_in, cat_out, lexicon_path, use_llm, audit_path);
        if (ev->parsed()) return run_evaluate(logs_path, ds_path, out_prefix);
        if (rep->parsed()) return run_report(rep_dataset, rep_annotations);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
