#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facekit {

enum class ErrorCode {
    Io,
    MalformedHeader,
    Truncated,
    UnsupportedMaxval,
    InvalidArgument,
    DimensionMismatch,
    EmptyIntersection,
    InvalidDepth,
    NoDepthSupport,
    MalformedRow,
    EmptyInput,
    NonFinite,
    VersionMismatch,
    CorruptedPayload,
    FeatureMismatch,
    LabelMismatch,
    ConsistencyFailure,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code lets
/// callers (and the CLI's exit-code mapping) distinguish failure classes
/// without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace facekit
