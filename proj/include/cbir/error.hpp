#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbir {

enum class ErrorCode {
    // imagecore
    UnsupportedFormat,
    CorruptPayload,
    ConstantChannel,
    TooSmall,
    // numerics
    OddLength,
    LengthMismatch,
    NotSquare,
    NotDivisible,
    MalformedPyramid,
    NotPowerOfTwo,
    OddDims,
    NoConvergence,
    // features
    OutOfRange,
    EmptyHistogram,
    FeatureExtractionFailure,
    EmptyShape,
    // classifier
    MissingCategory,
    VersionMismatch,
    Corrupt,
    // retrieval
    EmptyCorpus,
    DimMismatch,
    NegativeDistance,
    UntrainedClassifier,
    NormalizationUnfitted,
    DuplicateFeedback,
    UnknownQuery,
    UnknownImage,
    // store
    StoreError,
    StoreFull,
    IoError,
    NotFound,
    // service
    MissingLabels,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library surfaces as this exception; `code()` is the
/// stable machine-readable part, `what()` carries context for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cbir
