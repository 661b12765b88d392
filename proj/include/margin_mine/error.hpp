#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace margin_mine {

enum class ErrorCode {
    DimensionMismatch,
    DegenerateVector,
    NonFinite,
    IdMismatch,
    MissingDocument,
    FormatError,
    EmptyCorpus,
    EmptyPool,
    EmptyNeighborList,
    NoDocumentLinks,
    MissingChannel,
    EmptyText,
    BothEmptyAfterFiltering,
    EmptyInput,
    MissingTranslation,
    EmptyGold,
    EmptyPairSet,
    MissingBaseline,
    InvalidConfig,
    IoError,
};

inline std::string_view
error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch:
            return "DimensionMismatch";
        case ErrorCode::DegenerateVector:
            return "DegenerateVector";
        case ErrorCode::NonFinite:
            return "NonFinite";
        case ErrorCode::IdMismatch:
            return "IdMismatch";
        case ErrorCode::MissingDocument:
            return "MissingDocument";
        case ErrorCode::FormatError:
            return "FormatError";
        case ErrorCode::EmptyCorpus:
            return "EmptyCorpus";
        case ErrorCode::EmptyPool:
            return "EmptyPool";
        case ErrorCode::EmptyNeighborList:
            return "EmptyNeighborList";
        case ErrorCode::NoDocumentLinks:
            return "NoDocumentLinks";
        case ErrorCode::MissingChannel:
            return "MissingChannel";
        case ErrorCode::EmptyText:
            return "EmptyText";
        case ErrorCode::BothEmptyAfterFiltering:
            return "BothEmptyAfterFiltering";
        case ErrorCode::EmptyInput:
            return "EmptyInput";
        case ErrorCode::MissingTranslation:
            return "MissingTranslation";
        case ErrorCode::EmptyGold:
            return "EmptyGold";
        case ErrorCode::EmptyPairSet:
            return "EmptyPairSet";
        case ErrorCode::MissingBaseline:
            return "MissingBaseline";
        case ErrorCode::InvalidConfig:
            return "InvalidConfig";
        case ErrorCode::IoError:
            return "IoError";
    }
    return "Unknown";
}

/// Configuration problems (as opposed to bad input data) map to a distinct
/// CLI exit code.
inline bool
is_configuration_error(ErrorCode code) {
    return code == ErrorCode::InvalidConfig || code == ErrorCode::MissingChannel ||
           code == ErrorCode::MissingBaseline;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {
    }

    ErrorCode
    code() const noexcept {
        return code_;
    }

private:
    ErrorCode code_;
};

}  // namespace margin_mine
