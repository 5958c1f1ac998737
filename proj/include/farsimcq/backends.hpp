#pragma once

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "farsimcq/candidate_gen.hpp"
#include "farsimcq/filter_stack.hpp"
#include "farsimcq/question_gen.hpp"
#include "farsimcq/rank_select.hpp"
#include "farsimcq/taxonomy.hpp"

namespace farsimcq {

// --- Transports -------------------------------------------------------------

// Runs `command` through /bin/sh, writes one JSON line to its stdin, and
// returns the first line of its stdout parsed as JSON. One process per
// request.
inline nlohmann::json invoke_line_json(const std::string& command,
                                       const nlohmann::json& request) {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw Error(ErrorCode::BACKEND_ERROR, "pipe failed");
    pid_t pid = fork();
    if (pid < 0) throw Error(ErrorCode::BACKEND_ERROR, "fork failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    // A child that exits without reading stdin closes the pipe; ignore
    // SIGPIPE so the write fails instead of killing the process.
    static const auto sigpipe_ignored = std::signal(SIGPIPE, SIG_IGN);
    (void)sigpipe_ignored;
    std::string payload = request.dump() + "\n";
    ssize_t written = write(in_pipe[1], payload.data(), payload.size());
    close(in_pipe[1]);
    std::string output;
    char buf[4096];
    ssize_t n;
    while ((n = read(out_pipe[0], buf, sizeof buf)) > 0) output.append(buf, size_t(n));
    close(out_pipe[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (written < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw Error(ErrorCode::BACKEND_ERROR, "command failed: " + command);
    auto eol = output.find('\n');
    std::string line = eol == std::string::npos ? output : output.substr(0, eol);
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorCode::BACKEND_ERROR, "bad response from: " + command);
    }
}

// POSTs JSON to `endpoint` (e.g. "http://host:port/path") and parses the
// JSON body of the response.
inline nlohmann::json invoke_http_json(const std::string& endpoint,
                                       const nlohmann::json& request,
                                       const std::string& bearer_token = "") {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::CONFIG_ERROR, "bad endpoint " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    std::string host = endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
    httplib::Client client(host);
    client.set_read_timeout(30, 0);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(path, headers, request.dump(), "application/json");
    if (!res || res->status != 200)
        throw Error(ErrorCode::BACKEND_ERROR,
                    "http " + endpoint + " -> " + (res ? std::to_string(res->status) : "no response"));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorCode::BACKEND_ERROR, "bad response from " + endpoint);
    }
}

// Dispatches to the command or HTTP transport based on endpoint shape, with
// retries and exponential backoff.
struct ExternalTransport {
    std::string target;  // "http(s)://..." or a shell command
    int max_attempts = 3;
    int backoff_ms = 100;
    std::string bearer_token;

    bool is_http() const {
        return target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0;
    }

    nlohmann::json call(const nlohmann::json& request) const {
        std::string last_error;
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            if (attempt > 0 && backoff_ms > 0)
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(backoff_ms << (attempt - 1)));
            try {
                return is_http() ? invoke_http_json(target, request, bearer_token)
                                 : invoke_line_json(target, request);
            } catch (const Error& e) {
                last_error = e.what();
            }
        }
        throw Error(ErrorCode::BACKEND_ERROR, last_error);
    }
};

// --- Adapters ----------------------------------------------------------------

// request {"answer","context"} -> response {"question"}
class ExternalQGBackend : public QGBackend {
  public:
    explicit ExternalQGBackend(ExternalTransport transport, std::string id = "external-qg")
        : transport_(std::move(transport)), id_(std::move(id)) {}

    std::string id() const override { return id_; }

    std::string generate(const QGInput& input) override {
        input.validate();
        nlohmann::json req{{"answer", input.answer}, {"context", input.context}};
        nlohmann::json res = transport_.call(req);
        if (!res.contains("question") || !res["question"].is_string())
            throw Error(ErrorCode::BACKEND_ERROR, id_ + ": missing question");
        return res["question"].get<std::string>();
    }

  private:
    ExternalTransport transport_;
    std::string id_;
};

// request {"masked","mask_token","k"} -> {"predictions":[{"token","score"}]}
class ExternalFillMask : public FillMaskBackend {
  public:
    ExternalFillMask(ExternalTransport transport, std::string id, std::string mask = "<MASK>")
        : transport_(std::move(transport)), id_(std::move(id)), mask_(std::move(mask)) {}

    std::string id() const override { return id_; }
    std::string mask_token() const override { return mask_; }

    std::vector<FillMaskPrediction> predict(const std::string& masked, int k) override {
        nlohmann::json req{{"masked", masked}, {"mask_token", mask_}, {"k", k}};
        nlohmann::json res = transport_.call(req);
        if (!res.contains("predictions") || !res["predictions"].is_array())
            throw Error(ErrorCode::BACKEND_ERROR, id_ + ": missing predictions");
        std::vector<FillMaskPrediction> out;
        for (const auto& p : res["predictions"])
            out.push_back({p.at("token").get<std::string>(), p.at("score").get<double>()});
        for (size_t i = 1; i < out.size(); ++i)
            if (out[i].score > out[i - 1].score)
                throw Error(ErrorCode::BACKEND_ERROR, id_ + ": predictions not sorted");
        return out;
    }

  private:
    ExternalTransport transport_;
    std::string id_;
    std::string mask_;
};

// request {"sentence"} -> {"tokens":[{"token","upos","deprel"}]}
class ExternalTagger : public Tagger {
  public:
    explicit ExternalTagger(ExternalTransport transport, std::string id = "external-tagger")
        : transport_(std::move(transport)), id_(std::move(id)) {}

    std::string id() const override { return id_; }

    std::vector<TaggedToken> tag(const std::string& sentence) override {
        nlohmann::json res = transport_.call({{"sentence", sentence}});
        if (!res.contains("tokens") || !res["tokens"].is_array())
            throw Error(ErrorCode::TAGGER_ERROR, id_ + ": missing tokens");
        std::vector<TaggedToken> out;
        for (const auto& t : res["tokens"])
            out.push_back({t.at("token").get<std::string>(), t.at("upos").get<std::string>(),
                           t.at("deprel").get<std::string>()});
        return out;
    }

  private:
    ExternalTransport transport_;
    std::string id_;
};

// request {"surface","context"} -> {"label"}  ("" or null = NONE)
class ExternalRecognizer : public EntityRecognizer {
  public:
    ExternalRecognizer(ExternalTransport transport, std::vector<std::string> labels,
                       std::string id = "external-ner")
        : transport_(std::move(transport)), labels_(std::move(labels)), id_(std::move(id)) {}

    std::string id() const override { return id_; }
    std::vector<std::string> label_set() const override { return labels_; }

    std::string recognize(const std::string& surface, const std::string& context) override {
        nlohmann::json res = transport_.call({{"surface", surface}, {"context", context}});
        if (!res.contains("label")) throw Error(ErrorCode::NER_ERROR, id_ + ": missing label");
        if (res["label"].is_null()) return "";
        return res["label"].get<std::string>();
    }

  private:
    ExternalTransport transport_;
    std::vector<std::string> labels_;
    std::string id_;
};

// request {"sentence","span":[start,end]} -> {"vector":[float]}
class ExternalEncoder : public ContextEncoder {
  public:
    ExternalEncoder(ExternalTransport transport, size_t dim, std::string id = "external-encoder")
        : transport_(std::move(transport)), dim_(dim), id_(std::move(id)) {}

    std::string id() const override { return id_; }
    size_t dim() const override { return dim_; }

    std::vector<double> embed(const std::string& sentence, size_t span_start,
                              size_t span_end) override {
        nlohmann::json req{{"sentence", sentence},
                           {"span", {span_start, span_end}}};
        nlohmann::json res = transport_.call(req);
        if (!res.contains("vector") || !res["vector"].is_array())
            throw Error(ErrorCode::ENCODER_ERROR, id_ + ": missing vector");
        std::vector<double> out;
        for (const auto& v : res["vector"]) out.push_back(v.get<double>());
        if (out.size() != dim_)
            throw Error(ErrorCode::ENCODER_ERROR, id_ + ": dimension mismatch");
        return out;
    }

  private:
    ExternalTransport transport_;
    size_t dim_;
    std::string id_;
};

// request {"prompt"} -> {"completion"}. Endpoint and key come from the
// environment; every request/response pair is appended to the audit file.
class ExternalLLMClient : public LLMClient {
  public:
    ExternalLLMClient(ExternalTransport transport, std::string id = "external-llm",
                      std::string audit_path = "")
        : transport_(std::move(transport)), id_(std::move(id)),
          audit_path_(std::move(audit_path)) {}

    static ExternalLLMClient from_env(const std::string& audit_path = "") {
        const char* endpoint = std::getenv("FARSIMCQ_LLM_ENDPOINT");
        if (!endpoint) throw Error(ErrorCode::CONFIG_ERROR, "FARSIMCQ_LLM_ENDPOINT not set");
        ExternalTransport t;
        t.target = endpoint;
        if (const char* key = std::getenv("FARSIMCQ_LLM_KEY")) t.bearer_token = key;
        return ExternalLLMClient(std::move(t), "env-llm", audit_path);
    }

    std::string id() const override { return id_; }

    std::string complete(const std::string& prompt) override {
        nlohmann::json res;
        try {
            res = transport_.call({{"prompt", prompt}});
        } catch (const Error& e) {
            audit(prompt, std::string("<error> ") + e.what());
            throw;
        }
        if (!res.contains("completion") || !res["completion"].is_string())
            throw Error(ErrorCode::CLIENT_ERROR, id_ + ": missing completion");
        std::string completion = res["completion"].get<std::string>();
        audit(prompt, completion);
        return completion;
    }

  private:
    void audit(const std::string& prompt, const std::string& response) {
        if (audit_path_.empty()) return;
        std::lock_guard<std::mutex> lock(*mutex_);
        std::ofstream out(audit_path_, std::ios::app);
        out << nlohmann::json{{"client", id_}, {"prompt", prompt}, {"response", response}}.dump()
            << '\n';
    }

    ExternalTransport transport_;
    std::string id_;
    std::string audit_path_;
    std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

}  // namespace farsimcq
