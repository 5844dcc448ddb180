#include "cbir/error.hpp"

namespace cbir {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::CorruptPayload: return "CorruptPayload";
        case ErrorCode::ConstantChannel: return "ConstantChannel";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::OddLength: return "OddLength";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NotSquare: return "NotSquare";
        case ErrorCode::NotDivisible: return "NotDivisible";
        case ErrorCode::MalformedPyramid: return "MalformedPyramid";
        case ErrorCode::NotPowerOfTwo: return "NotPowerOfTwo";
        case ErrorCode::OddDims: return "OddDims";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::EmptyHistogram: return "EmptyHistogram";
        case ErrorCode::FeatureExtractionFailure: return "FeatureExtractionFailure";
        case ErrorCode::EmptyShape: return "EmptyShape";
        case ErrorCode::MissingCategory: return "MissingCategory";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::Corrupt: return "Corrupt";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::NegativeDistance: return "NegativeDistance";
        case ErrorCode::UntrainedClassifier: return "UntrainedClassifier";
        case ErrorCode::NormalizationUnfitted: return "NormalizationUnfitted";
        case ErrorCode::DuplicateFeedback: return "DuplicateFeedback";
        case ErrorCode::UnknownQuery: return "UnknownQuery";
        case ErrorCode::UnknownImage: return "UnknownImage";
        case ErrorCode::StoreError: return "StoreError";
        case ErrorCode::StoreFull: return "StoreFull";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::MissingLabels: return "MissingLabels";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace cbir
