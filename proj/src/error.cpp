#include "facekit/error.hpp"

namespace facekit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return "io";
        case ErrorCode::MalformedHeader: return "malformed header";
        case ErrorCode::Truncated: return "truncated";
        case ErrorCode::UnsupportedMaxval: return "unsupported maxval";
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::DimensionMismatch: return "dimension mismatch";
        case ErrorCode::EmptyIntersection: return "empty intersection";
        case ErrorCode::InvalidDepth: return "invalid depth";
        case ErrorCode::NoDepthSupport: return "no depth support";
        case ErrorCode::MalformedRow: return "malformed row";
        case ErrorCode::EmptyInput: return "empty input";
        case ErrorCode::NonFinite: return "non-finite value";
        case ErrorCode::VersionMismatch: return "version mismatch";
        case ErrorCode::CorruptedPayload: return "corrupted payload";
        case ErrorCode::FeatureMismatch: return "feature mismatch";
        case ErrorCode::LabelMismatch: return "label mismatch";
        case ErrorCode::ConsistencyFailure: return "consistency failure";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace facekit
