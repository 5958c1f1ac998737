#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "farsimcq/candidate_gen.hpp"

using namespace farsimcq;

namespace {

struct StubFillMask : FillMaskBackend {
    std::vector<FillMaskPrediction> preds;
    std::string id() const override { return "stub-fm"; }
    std::string mask_token() const override { return "<MASK>"; }
    std::vector<FillMaskPrediction> predict(const std::string&, int k) override {
        std::vector<FillMaskPrediction> out(preds.begin(),
                                            preds.begin() + std::min<size_t>(preds.size(), size_t(k)));
        return out;
    }
};

struct EchoBuilder : SentenceBuilder {
    std::string sentence;
    std::string id() const override { return "echo-builder"; }
    std::string build(const std::string&, const std::string&) override { return sentence; }
};

}  // namespace

TEST_CASE("fallback builds the answer sentence from the question") {
    auto lex = QuestionWordLexicon::english_default();
    auto s = build_answer_sentence("Who wrote Hamlet?", "Shakespeare", lex);
    CHECK(s.text == "Shakespeare wrote Hamlet");
    CHECK(s.answer_slice() == "Shakespeare");
    CHECK_NOTHROW(s.validate("Shakespeare"));
}

TEST_CASE("multi-token question word is replaced as a unit") {
    auto lex = QuestionWordLexicon::english_default();
    auto s = build_answer_sentence("How many floors does the tower have?", "12", lex);
    CHECK(s.text == "12 floors does the tower have");
    CHECK(s.answer_slice() == "12");
}

TEST_CASE("no interrogative found prepends the answer") {
    auto lex = QuestionWordLexicon::english_default();
    auto s = build_answer_sentence("name the river?", "Nile", lex);
    CHECK(s.text == "Nile name the river");
    CHECK(s.answer_slice() == "Nile");
}

TEST_CASE("builder output lacking the answer is ANSWER_NOT_LOCATED") {
    auto lex = QuestionWordLexicon::english_default();
    EchoBuilder builder;
    builder.sentence = "The capital is elsewhere";
    try {
        build_answer_sentence("What is the capital?", "Tehran", lex, &builder);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ANSWER_NOT_LOCATED);
    }
}

TEST_CASE("builder output containing the answer gets the located span") {
    auto lex = QuestionWordLexicon::english_default();
    EchoBuilder builder;
    builder.sentence = "Tehran is the capital of Iran";
    auto s = build_answer_sentence("What is the capital?", "Tehran", lex, &builder);
    CHECK(s.answer_slice() == "Tehran");
    CHECK(s.span_start == 0);
}

TEST_CASE("mask_answer substitutes exactly one mask token") {
    AnswerSentence s{"Tehran is the capital", 0, 6};
    CHECK(mask_answer(s, "<MASK>") == "<MASK> is the capital");
    AnswerSentence whole{"Tehran", 0, 6};
    CHECK(mask_answer(whole, "<MASK>") == "<MASK>");
    AnswerSentence multi{"It is the capital now", 6, 17};
    CHECK(mask_answer(multi, "<MASK>") == "It is <MASK> now");
}

TEST_CASE("fillmask candidates drop the answer before truncation") {
    StubFillMask backend;
    backend.preds = {{"Paris", 0.4}, {"Tehran", 0.3}, {"Lyon", 0.2}};
    auto out = fillmask_candidates(backend, "<MASK> is the capital", "Tehran", 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].surface == "Paris");
    CHECK(out[1].surface == "Lyon");
    CHECK(out[0].provenance.kind == ProvenanceKind::FILL_MASK);
    CHECK(out[0].provenance.source_id == "stub-fm");
    CHECK(out[0].generator_score == 0.4);
}

TEST_CASE("k larger than the backend list returns the whole filtered list") {
    StubFillMask backend;
    backend.preds = {{"a", 0.9}, {"b", 0.8}};
    auto out = fillmask_candidates(backend, "x <MASK> y", "z", 10);
    CHECK(out.size() == 2);
}

TEST_CASE("mask count violations raise NO_MASK and MULTIPLE_MASKS") {
    StubFillMask backend;
    backend.preds = {{"a", 0.9}};
    try {
        fillmask_candidates(backend, "no mask here", "z", 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NO_MASK);
    }
    try {
        fillmask_candidates(backend, "<MASK> twice <MASK>", "z", 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MULTIPLE_MASKS);
    }
}

static WordVectorTable table_from(const std::string& text) {
    std::istringstream in(text);
    return WordVectorTable::parse("emb1", in);
}

TEST_CASE("embedding candidates rank by cosine") {
    auto table = table_from("a 1 0\nb 1 0.01\nc 0 1\n");
    auto one = embedding_candidates(table, "a", 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].surface == "b");
    CHECK(one[0].provenance.kind == ProvenanceKind::STATIC_EMBEDDING);
    CHECK(one[0].provenance.source_id == "emb1");

    auto two = embedding_candidates(table, "a", 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0].surface == "b");
    CHECK(two[1].surface == "c");
}

TEST_CASE("OOV answer yields an empty candidate list") {
    auto table = table_from("a 1 0\nb 0 1\n");
    CHECK(embedding_candidates(table, "zzz", 3).empty());
}

TEST_CASE("word vector table rejects duplicate normalized words") {
    CHECK_THROWS_AS(table_from("a 1 0\n a 0 1\n"), Error);
}

TEST_CASE("header line is honored") {
    auto table = table_from("2 3\nfoo 1 2 3\nbar 4 5 6\n");
    CHECK(table.dim == 3);
    CHECK(table.words.size() == 2);
}

TEST_CASE("embedding candidates match brute-force cosine ranking") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> n_dist(2, 50);
    std::uniform_int_distribution<int> d_dist(2, 6);
    std::uniform_real_distribution<double> v_dist(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        int n = n_dist(rng), d = d_dist(rng);
        WordVectorTable table;
        table.embedding_id = "rnd";
        table.dim = size_t(d);
        for (int i = 0; i < n; ++i) {
            std::string w = "w" + std::to_string(i);
            std::vector<double> v(static_cast<size_t>(d));
            for (double& x : v) x = v_dist(rng);
            table.index[w] = table.words.size();
            table.words.push_back(w);
            table.vectors.push_back(v);
        }
        auto got = embedding_candidates(table, "w0", n - 1);
        REQUIRE(static_cast<int>(got.size()) == n - 1);
        // Independent full ranking.
        std::vector<std::pair<double, std::string>> ref;
        for (int i = 1; i < n; ++i)
            ref.emplace_back(cosine(table.vectors[0], table.vectors[size_t(i)]),
                             table.words[size_t(i)]);
        std::sort(ref.begin(), ref.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int i = 0; i < n - 1; ++i) CHECK(got[size_t(i)].surface == ref[size_t(i)].second);
    }
}

static Candidate cand(const std::string& surface, double score, ProvenanceKind kind) {
    Candidate c;
    c.surface = surface;
    c.generator_score = score;
    c.provenance = {kind, kind == ProvenanceKind::FILL_MASK ? "fm" : "emb"};
    return c;
}

TEST_CASE("merge_pool dedupes keeping the best score") {
    std::vector<Candidate> l1 = {cand("x", 0.9, ProvenanceKind::FILL_MASK),
                                 cand("y", 0.5, ProvenanceKind::FILL_MASK)};
    std::vector<Candidate> l2 = {cand("y", 0.8, ProvenanceKind::FILL_MASK),
                                 cand("z", 0.7, ProvenanceKind::FILL_MASK)};
    auto out = merge_pool({l1, l2}, "ans");
    REQUIRE(out.size() == 3);
    CHECK(out[0].surface == "x");
    CHECK(out[1].surface == "y");
    CHECK(out[1].generator_score == 0.8);
    CHECK(out[2].surface == "z");
}

TEST_CASE("merge_pool removes the answer and empty lists") {
    CHECK(merge_pool({}, "a").empty());
    std::vector<Candidate> l = {cand("Tehran", 0.9, ProvenanceKind::FILL_MASK)};
    CHECK(merge_pool({l}, " Tehran ").empty());
}

TEST_CASE("merge_pool orders fill-mask before embedding") {
    std::vector<Candidate> fm = {cand("b", 0.1, ProvenanceKind::FILL_MASK)};
    std::vector<Candidate> emb = {cand("a", 0.9, ProvenanceKind::STATIC_EMBEDDING)};
    auto out = merge_pool({emb, fm}, "ans");
    REQUIRE(out.size() == 2);
    CHECK(out[0].surface == "b");
    CHECK(out[1].surface == "a");
}

TEST_CASE("cross-provenance duplicates keep the fill-mask entry") {
    std::vector<Candidate> fm = {cand("x", 0.1, ProvenanceKind::FILL_MASK)};
    std::vector<Candidate> emb = {cand("x", 0.9, ProvenanceKind::STATIC_EMBEDDING)};
    auto out = merge_pool({fm, emb}, "ans");
    REQUIRE(out.size() == 1);
    CHECK(out[0].provenance.kind == ProvenanceKind::FILL_MASK);
}

TEST_CASE("merge_pool is idempotent on its own output") {
    std::vector<Candidate> l1 = {cand("x", 0.9, ProvenanceKind::FILL_MASK),
                                 cand("y", 0.5, ProvenanceKind::STATIC_EMBEDDING),
                                 cand("z", 0.7, ProvenanceKind::FILL_MASK)};
    auto once = merge_pool({l1}, "ans");
    auto twice = merge_pool({once}, "ans");
    REQUIRE(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) {
        CHECK(once[i].surface == twice[i].surface);
        CHECK(once[i].generator_score == twice[i].generator_score);
    }
}
