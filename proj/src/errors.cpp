#include "bsps/errors.hpp"

namespace bsps {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConstantColumn: return "ConstantColumn";
        case ErrorKind::ConstantResponse: return "ConstantResponse";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::AllCandidatesDegenerate: return "AllCandidatesDegenerate";
        case ErrorKind::InsufficientDf: return "InsufficientDf";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::FoldTooSmall: return "FoldTooSmall";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::DataError: return "DataError";
    }
    return "Unknown";
}

}  // namespace bsps
