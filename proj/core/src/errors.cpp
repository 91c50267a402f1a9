#include "ragforge/errors.hpp"

namespace ragforge {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::UnknownLanguage: return "UnknownLanguage";
        case ErrorCode::DuplicatePivotTitle: return "DuplicatePivotTitle";
        case ErrorCode::MissingParallel: return "MissingParallel";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::NoEligibleSource: return "NoEligibleSource";
        case ErrorCode::QuotaUnsatisfiable: return "QuotaUnsatisfiable";
        case ErrorCode::SameLanguage: return "SameLanguage";
        case ErrorCode::MissingLanguage: return "MissingLanguage";
        case ErrorCode::MissingPivot: return "MissingPivot";
        case ErrorCode::MissingTarget: return "MissingTarget";
        case ErrorCode::EmptyKnowledge: return "EmptyKnowledge";
        case ErrorCode::InsufficientMaterial: return "InsufficientMaterial";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::DuplicatePassageId: return "DuplicatePassageId";
        case ErrorCode::EmbedderFailure: return "EmbedderFailure";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TransportFailure: return "TransportFailure";
        case ErrorCode::TransportExhausted: return "TransportExhausted";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TestsetMismatch: return "TestsetMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace ragforge
