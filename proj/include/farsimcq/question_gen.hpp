#pragma once

#include <memory>
#include <string>

#include "farsimcq/taxonomy.hpp"
#include "farsimcq/types.hpp"

namespace farsimcq {

struct QGInput {
    std::string answer;
    std::string context;
    std::string sep_token = "[SEP]";

    void validate() const {
        if (normalize_text(answer).empty()) throw Error(ErrorCode::EMPTY_FIELD, "answer");
        if (normalize_text(context).empty()) throw Error(ErrorCode::EMPTY_FIELD, "context");
        if (answer.find(sep_token) != std::string::npos)
            throw Error(ErrorCode::INVARIANT_VIOLATION, "sep token occurs in answer");
    }
};

// answer ++ " " ++ sep ++ " " ++ context, single-space joins.
inline std::string format_qg_input(const std::string& answer, const std::string& context,
                                   const std::string& sep = "[SEP]") {
    QGInput in{answer, context, sep};
    in.validate();
    return normalize_text(answer) + " " + sep + " " + normalize_text(context);
}

struct QGBackend {
    virtual ~QGBackend() = default;
    virtual std::string id() const = 0;
    virtual bool concurrent_safe() const { return false; }
    virtual std::string generate(const QGInput& input) = 0;
};

// Deterministic template backend: builds a generic interrogative from the
// head clause of the context with the answer blanked out. Enough to run the
// full pipeline without a model.
class TemplateQGBackend : public QGBackend {
  public:
    std::string id() const override { return "template"; }
    bool concurrent_safe() const override { return true; }

    std::string generate(const QGInput& input) override {
        input.validate();
        std::string context = normalize_text(input.context);
        std::string answer = normalize_text(input.answer);
        // Head clause: up to the first sentence terminator.
        size_t cut = context.find_first_of(".!?");
        std::string clause = cut == std::string::npos ? context : context.substr(0, cut);
        // Blank every occurrence of the answer.
        size_t pos;
        while ((pos = clause.find(answer)) != std::string::npos)
            clause.replace(pos, answer.size(), "___");
        return normalize_text("What corresponds to: " + clause + "?");
    }
};

inline std::string generate_question(QGBackend& backend, const QARecord& rec,
                                     bool bypass_if_present = false) {
    if (bypass_if_present && !normalize_text(rec.question).empty()) return rec.question;
    std::string q;
    try {
        q = backend.generate(QGInput{rec.answer, rec.context});
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::BACKEND_ERROR, std::string(backend.id()) + ": " + e.what());
    }
    if (normalize_text(q).empty())
        throw Error(ErrorCode::BACKEND_ERROR, backend.id() + ": empty question");
    return q;
}

}  // namespace farsimcq
