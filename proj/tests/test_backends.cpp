#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <thread>

#include "farsimcq/backends.hpp"

using namespace farsimcq;

TEST_CASE("line transport round-trips one JSON line") {
    nlohmann::json req{{"hello", "world"}, {"n", 3}};
    auto res = invoke_line_json("cat", req);
    CHECK(res == req);
}

TEST_CASE("line transport surfaces command failure") {
    try {
        invoke_line_json("false", nlohmann::json{{"x", 1}});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BACKEND_ERROR);
    }
}

TEST_CASE("line transport rejects non-JSON output") {
    try {
        invoke_line_json("cat >/dev/null; echo notjson", nlohmann::json{{"x", 1}});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BACKEND_ERROR);
    }
}

TEST_CASE("bad endpoint shape is CONFIG_ERROR") {
    try {
        invoke_http_json("not-a-url", nlohmann::json{});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CONFIG_ERROR);
    }
}

TEST_CASE("transport retries then gives up") {
    ExternalTransport t;
    t.target = "false";
    t.max_attempts = 2;
    t.backoff_ms = 1;
    CHECK_THROWS_AS(t.call(nlohmann::json{{"x", 1}}), Error);
}

TEST_CASE("external QG backend over the line protocol") {
    ExternalTransport t;
    t.target = R"(cat >/dev/null; echo '{"question": "Generated?"}')";
    ExternalQGBackend backend(t);
    QGInput in{"Tehran", "Tehran is the capital."};
    CHECK(backend.generate(in) == "Generated?");
}

TEST_CASE("external fill-mask validates sort order") {
    ExternalTransport good;
    good.target =
        R"(cat >/dev/null; echo '{"predictions": [{"token": "a", "score": 0.9}, {"token": "b", "score": 0.5}]}')";
    ExternalFillMask fm(good, "ext-fm");
    auto preds = fm.predict("x <MASK> y", 2);
    REQUIRE(preds.size() == 2);
    CHECK(preds[0].token == "a");

    ExternalTransport bad;
    bad.target =
        R"(cat >/dev/null; echo '{"predictions": [{"token": "a", "score": 0.1}, {"token": "b", "score": 0.5}]}')";
    bad.max_attempts = 1;
    ExternalFillMask fm_bad(bad, "ext-fm");
    CHECK_THROWS_AS(fm_bad.predict("x <MASK> y", 2), Error);
}

TEST_CASE("external tagger and recognizer over the line protocol") {
    ExternalTransport t;
    t.target =
        R"(cat >/dev/null; echo '{"tokens": [{"token": "x", "upos": "NOUN", "deprel": "root"}]}')";
    ExternalTagger tagger(t);
    auto tokens = tagger.tag("x");
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].upos == "NOUN");

    ExternalTransport n;
    n.target = R"(cat >/dev/null; echo '{"label": "LOC"}')";
    ExternalRecognizer ner(n, {"LOC", "PER"});
    CHECK(ner.recognize("Tehran", "") == "LOC");
    CHECK(ner.label_set().size() == 2);

    ExternalTransport none;
    none.target = R"(cat >/dev/null; echo '{"label": null}')";
    ExternalRecognizer ner_none(none, {"LOC"});
    CHECK(ner_none.recognize("abc", "") == "");
}

TEST_CASE("external encoder validates dimension") {
    ExternalTransport t;
    t.target = R"(cat >/dev/null; echo '{"vector": [0.1, 0.2, 0.3]}')";
    ExternalEncoder enc(t, 3);
    auto v = enc.embed("abc def", 0, 3);
    REQUIRE(v.size() == 3);
    CHECK(v[1] == Catch::Approx(0.2));

    ExternalEncoder wrong(t, 4);
    CHECK_THROWS_AS(wrong.embed("abc", 0, 3), Error);
}

TEST_CASE("http transport round-trips against a local server") {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/v1/echo", [&](const httplib::Request& req, httplib::Response& res) {
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json out{{"completion", "geography"}, {"echo", body}};
        res.set_content(out.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    std::string endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/echo";
    auto res = invoke_http_json(endpoint, nlohmann::json{{"prompt", "hi"}}, "secret");
    CHECK(res["completion"] == "geography");
    CHECK(res["echo"]["prompt"] == "hi");
    CHECK(seen_auth == "Bearer secret");

    // LLM client over the same server, with audit logging.
    std::string audit_path = "test_audit_tmp.jsonl";
    std::remove(audit_path.c_str());
    ExternalTransport t;
    t.target = endpoint;
    ExternalLLMClient client(t, "llm-test", audit_path);
    CHECK(client.complete("classify this") == "geography");
    std::ifstream audit(audit_path);
    std::string line;
    REQUIRE(std::getline(audit, line));
    auto j = nlohmann::json::parse(line);
    CHECK(j["prompt"] == "classify this");
    CHECK(j["response"] == "geography");
    std::remove(audit_path.c_str());

    server.stop();
    worker.join();
}

TEST_CASE("llm client from_env requires the endpoint variable") {
    unsetenv("FARSIMCQ_LLM_ENDPOINT");
    try {
        ExternalLLMClient::from_env();
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CONFIG_ERROR);
    }
    setenv("FARSIMCQ_LLM_ENDPOINT", "http://127.0.0.1:1/x", 1);
    auto client = ExternalLLMClient::from_env();
    CHECK(client.id() == "env-llm");
    unsetenv("FARSIMCQ_LLM_ENDPOINT");
}

TEST_CASE("llm client missing completion field is CLIENT_ERROR") {
    ExternalTransport t;
    t.target = R"(cat >/dev/null; echo '{}')";
    ExternalLLMClient client(t);
    try {
        client.complete("x");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CLIENT_ERROR);
    }
}
