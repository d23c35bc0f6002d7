#include "autostrat/error.hpp"

namespace autostrat {

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidArgument:
        case ErrorCode::KTooLarge:
        case ErrorCode::UnknownFeature:
        case ErrorCode::NoFeatures:
        case ErrorCode::MismatchedFeatureSets:
        case ErrorCode::InvalidSpec:
            return 1;
        case ErrorCode::Io:
        case ErrorCode::SchemaMismatch:
        case ErrorCode::NonBinaryOutcome:
        case ErrorCode::ParseError:
        case ErrorCode::MissingValue:
        case ErrorCode::DegenerateColumn:
        case ErrorCode::SingleClassOutcome:
        case ErrorCode::DegenerateOutcome:
        case ErrorCode::EmptySubset:
        case ErrorCode::FullSubset:
        case ErrorCode::EmptyRecords:
            return 2;
        case ErrorCode::InsufficientRows:
        case ErrorCode::DegenerateTable:
        case ErrorCode::AlphaOutOfRange:
            return 3;
    }
    return 1;
}

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::UnknownFeature: return "UnknownFeature";
        case ErrorCode::NoFeatures: return "NoFeatures";
        case ErrorCode::MismatchedFeatureSets: return "MismatchedFeatureSets";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::Io: return "Io";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::NonBinaryOutcome: return "NonBinaryOutcome";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MissingValue: return "MissingValue";
        case ErrorCode::DegenerateColumn: return "DegenerateColumn";
        case ErrorCode::SingleClassOutcome: return "SingleClassOutcome";
        case ErrorCode::DegenerateOutcome: return "DegenerateOutcome";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::FullSubset: return "FullSubset";
        case ErrorCode::EmptyRecords: return "EmptyRecords";
        case ErrorCode::InsufficientRows: return "InsufficientRows";
        case ErrorCode::DegenerateTable: return "DegenerateTable";
        case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    }
    return "Unknown";
}

}  // namespace autostrat
