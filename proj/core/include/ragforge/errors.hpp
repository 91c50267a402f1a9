#pragma once

#include <stdexcept>
#include <string>

namespace ragforge {

enum class ErrorCode {
    // ingest
    MalformedRecord,
    UnknownLanguage,
    DuplicatePivotTitle,
    // corpus builder
    MissingParallel,
    TooShort,
    NoEligibleSource,
    QuotaUnsatisfiable,
    // csc synthesis
    SameLanguage,
    MissingLanguage,
    MissingPivot,
    MissingTarget,
    EmptyKnowledge,
    InsufficientMaterial,
    // retrieval
    EmptyCorpus,
    DuplicatePassageId,
    EmbedderFailure,
    DimensionMismatch,
    // gateway
    TransportFailure, // single failed attempt; retryable
    TransportExhausted,
    AuthError,
    ContextOverflow,
    MalformedResponse,
    OutOfRange,
    ReplayMiss,
    // metrics / eval
    LengthMismatch,
    TestsetMismatch,
    // cli
    ConfigError,
    SchemaError,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// All typed failures thrown by the library. `code()` identifies the
/// contract violation; the message carries the specifics.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace ragforge
