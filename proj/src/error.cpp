#include "mkdepth/error.hpp"

namespace mkdepth {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::InvalidDimension: return "invalid-dimension";
        case ErrorCode::UnsupportedDimension: return "unsupported-dimension";
        case ErrorCode::DimensionMismatch: return "dimension-mismatch";
        case ErrorCode::SizeMismatch: return "size-mismatch";
        case ErrorCode::NonuniformWeights: return "nonuniform-weights";
        case ErrorCode::NonpositiveWeight: return "nonpositive-weight";
        case ErrorCode::ParseError: return "parse-error";
        case ErrorCode::InconsistentArity: return "inconsistent-arity";
        case ErrorCode::IoError: return "io-error";
        case ErrorCode::InstanceTooLarge: return "instance-too-large";
        case ErrorCode::NumericalFailure: return "numerical-failure";
        case ErrorCode::MaxItersExceeded: return "max-iters-exceeded";
        case ErrorCode::EmptyCellUnrecoverable: return "empty-cell-unrecoverable";
        case ErrorCode::EmptySupport: return "empty-support";
        case ErrorCode::EmptySet: return "empty-set";
        case ErrorCode::InvalidTau: return "invalid-tau";
        case ErrorCode::NoOracle: return "no-oracle";
        case ErrorCode::Unfitted: return "unfitted";
    }
    return "unknown-error";
}

}  // namespace mkdepth
