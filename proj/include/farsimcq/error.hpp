#pragma once

#include <stdexcept>
#include <string>

namespace farsimcq {

enum class ErrorCode {
    MALFORMED_LINE,
    SPAN_MISMATCH,
    IO_ERROR,
    INVARIANT_VIOLATION,
    EMPTY_FIELD,
    BACKEND_ERROR,
    ANSWER_NOT_LOCATED,
    NO_MASK,
    MULTIPLE_MASKS,
    TAGGER_ERROR,
    NER_ERROR,
    INDEX_OUT_OF_RANGE,
    EMPTY_STORE,
    ENCODER_ERROR,
    BOTH_MISSING,
    EMPTY_TOP,
    CLIENT_ERROR,
    PROB_SUM_VIOLATION,
    EMPTY,
    EMPTY_OR_SINGLETON,
    UNKNOWN_ITEM,
    CONFIG_ERROR,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::MALFORMED_LINE: return "MALFORMED_LINE";
        case ErrorCode::SPAN_MISMATCH: return "SPAN_MISMATCH";
        case ErrorCode::IO_ERROR: return "IO_ERROR";
        case ErrorCode::INVARIANT_VIOLATION: return "INVARIANT_VIOLATION";
        case ErrorCode::EMPTY_FIELD: return "EMPTY_FIELD";
        case ErrorCode::BACKEND_ERROR: return "BACKEND_ERROR";
        case ErrorCode::ANSWER_NOT_LOCATED: return "ANSWER_NOT_LOCATED";
        case ErrorCode::NO_MASK: return "NO_MASK";
        case ErrorCode::MULTIPLE_MASKS: return "MULTIPLE_MASKS";
        case ErrorCode::TAGGER_ERROR: return "TAGGER_ERROR";
        case ErrorCode::NER_ERROR: return "NER_ERROR";
        case ErrorCode::INDEX_OUT_OF_RANGE: return "INDEX_OUT_OF_RANGE";
        case ErrorCode::EMPTY_STORE: return "EMPTY_STORE";
        case ErrorCode::ENCODER_ERROR: return "ENCODER_ERROR";
        case ErrorCode::BOTH_MISSING: return "BOTH_MISSING";
        case ErrorCode::EMPTY_TOP: return "EMPTY_TOP";
        case ErrorCode::CLIENT_ERROR: return "CLIENT_ERROR";
        case ErrorCode::PROB_SUM_VIOLATION: return "PROB_SUM_VIOLATION";
        case ErrorCode::EMPTY: return "EMPTY";
        case ErrorCode::EMPTY_OR_SINGLETON: return "EMPTY_OR_SINGLETON";
        case ErrorCode::UNKNOWN_ITEM: return "UNKNOWN_ITEM";
        case ErrorCode::CONFIG_ERROR: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace farsimcq
