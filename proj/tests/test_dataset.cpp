#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "farsimcq/dataset.hpp"

using namespace farsimcq;

static bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

TEST_CASE("read_dataset yields records in file order") {
    std::istringstream in(
        R"({"id": "a", "context": "x y", "question": "q?", "answer": "x"})"
        "\n"
        R"({"id": "b", "context": "z", "question": "q?", "answer": "z"})"
        "\n");
    auto recs = read_dataset(in);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].id == "a");
    CHECK(recs[1].id == "b");
}

TEST_CASE("missing answer field is MALFORMED_LINE") {
    CHECK(throws_code(ErrorCode::MALFORMED_LINE, [] {
        parse_qa_line(R"({"id": "a", "context": "x", "question": "q?"})", 1);
    }));
}

TEST_CASE("bad json is MALFORMED_LINE") {
    CHECK(throws_code(ErrorCode::MALFORMED_LINE, [] { parse_qa_line("{oops", 3); }));
}

TEST_CASE("span slice mismatch is SPAN_MISMATCH") {
    CHECK(throws_code(ErrorCode::SPAN_MISMATCH, [] {
        parse_qa_line(
            R"({"id": "a", "context": "x y z", "question": "q?", "answer": "y", "answer_start": 0})",
            1);
    }));
}

TEST_CASE("valid answer_start passes") {
    auto rec = parse_qa_line(
        R"({"id": "a", "context": "x y z", "question": "q?", "answer": "y", "answer_start": 2})",
        1);
    REQUIRE(rec.answer_start.has_value());
    CHECK(*rec.answer_start == 2);
}

TEST_CASE("empty answer is MALFORMED_LINE") {
    CHECK(throws_code(ErrorCode::MALFORMED_LINE, [] {
        parse_qa_line(R"({"id": "a", "context": "x", "question": "q?", "answer": "  "})", 1);
    }));
}

static MCQItem sample_item(const std::string& id) {
    MCQItem item;
    item.id = id;
    item.question = "What is the capital of Iran?";
    item.choices = {"Paris", "Tehran", "Cairo", "Rome"};
    item.correct_index = 1;
    item.qtype = QType::WHAT;
    item.content = ContentLabel::GEOGRAPHY;
    return item;
}

TEST_CASE("mcq round-trip is structurally equal") {
    std::vector<MCQItem> items = {sample_item("m1"), sample_item("m2")};
    items[1].flags.push_back(MCQFlag::FILTER_RELAXED);
    std::ostringstream out;
    CHECK(write_mcq_dataset(items, out) == 2);
    std::istringstream in(out.str());
    auto back = read_mcq_dataset(in);
    REQUIRE(back.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(back[i].id == items[i].id);
        CHECK(back[i].question == items[i].question);
        CHECK(back[i].choices == items[i].choices);
        CHECK(back[i].correct_index == items[i].correct_index);
        CHECK(back[i].qtype == items[i].qtype);
        CHECK(back[i].content == items[i].content);
        CHECK(back[i].flags.size() == items[i].flags.size());
    }
}

TEST_CASE("duplicate choices are INVARIANT_VIOLATION on write") {
    MCQItem item = sample_item("dup");
    item.choices[0] = "Tehran";
    std::ostringstream out;
    CHECK(throws_code(ErrorCode::INVARIANT_VIOLATION,
                      [&] { write_mcq_dataset({item}, out); }));
}

TEST_CASE("choices duplicated only under normalization still rejected") {
    MCQItem item = sample_item("dupnorm");
    item.choices[0] = "  Tehran ";
    std::ostringstream out;
    CHECK(throws_code(ErrorCode::INVARIANT_VIOLATION,
                      [&] { write_mcq_dataset({item}, out); }));
}

TEST_CASE("zero items write an empty file and return 0") {
    std::ostringstream out;
    CHECK(write_mcq_dataset({}, out) == 0);
    CHECK(out.str().empty());
}

TEST_CASE("incomplete flagged items round-trip with fewer choices") {
    MCQItem item = sample_item("inc");
    item.choices = {"Tehran", "Paris", "Rome"};
    item.correct_index = 0;
    item.flags.push_back(MCQFlag::INCOMPLETE_DISTRACTORS);
    std::ostringstream out;
    CHECK(write_mcq_dataset({item}, out, /*allow_incomplete=*/true) == 1);
    std::istringstream in(out.str());
    auto back = read_mcq_dataset(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0].choices.size() == 3);

    // Without the override the same item is rejected.
    std::ostringstream out2;
    CHECK(throws_code(ErrorCode::INVARIANT_VIOLATION,
                      [&] { write_mcq_dataset({item}, out2); }));
}

TEST_CASE("validate_mcq checks the source answer") {
    MCQItem item = sample_item("src");
    std::string answer = "Tehran";
    CHECK_NOTHROW(validate_mcq(item, &answer));
    std::string wrong = "Paris";
    CHECK(throws_code(ErrorCode::INVARIANT_VIOLATION, [&] { validate_mcq(item, &wrong); }));
}

TEST_CASE("candidate audit json carries provenance and verdicts") {
    Candidate c;
    c.surface = "Paris";
    c.provenance = {ProvenanceKind::FILL_MASK, "fm1"};
    c.generator_score = 0.4;
    c.fused_score = 0.7;
    c.rejections.push_back({FilterStage::POS, true, ""});
    auto j = candidate_audit_json("q1", c);
    CHECK(j["id"] == "q1");
    CHECK(j["provenance"] == "FILL_MASK:fm1");
    CHECK(j["kg_score"].is_null());
    CHECK(j["fused_score"].get<double>() == 0.7);
    REQUIRE(j["rejections"].size() == 1);
    CHECK(j["rejections"][0]["stage"] == "POS");
}
