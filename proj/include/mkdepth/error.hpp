#pragma once

#include <stdexcept>
#include <string>

namespace mkdepth {

enum class ErrorCode {
    InvalidArgument,
    InvalidDimension,
    UnsupportedDimension,
    DimensionMismatch,
    SizeMismatch,
    NonuniformWeights,
    NonpositiveWeight,
    ParseError,
    InconsistentArity,
    IoError,
    InstanceTooLarge,
    NumericalFailure,
    MaxItersExceeded,
    EmptyCellUnrecoverable,
    EmptySupport,
    EmptySet,
    InvalidTau,
    NoOracle,
    Unfitted,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mkdepth
