#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autostrat {

enum class ErrorCode {
    // configuration / contract
    InvalidConfig,
    InvalidArgument,
    KTooLarge,
    UnknownFeature,
    NoFeatures,
    MismatchedFeatureSets,
    InvalidSpec,
    // data
    Io,
    SchemaMismatch,
    NonBinaryOutcome,
    ParseError,
    MissingValue,
    DegenerateColumn,
    SingleClassOutcome,
    DegenerateOutcome,
    EmptySubset,
    FullSubset,
    EmptyRecords,
    // numeric
    InsufficientRows,
    DegenerateTable,
    AlphaOutOfRange,
};

/// Process exit-code category for an error: 1=config, 2=data, 3=numeric.
int exit_code_for(ErrorCode code) noexcept;

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace autostrat
