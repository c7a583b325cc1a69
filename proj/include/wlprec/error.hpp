#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wlprec {

enum class ErrorCode {
    InvalidArgument,
    NotPositiveDefinite,
    ZeroVector,
    WrongKind,
    NonPositiveGain,
    ZeroGain,
    ZeroChannel,
    ZeroPrecoder,
    UnequalNoise,
    DimensionMismatch,
    InvalidConfig,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::WrongKind: return "WrongKind";
        case ErrorCode::NonPositiveGain: return "NonPositiveGain";
        case ErrorCode::ZeroGain: return "ZeroGain";
        case ErrorCode::ZeroChannel: return "ZeroChannel";
        case ErrorCode::ZeroPrecoder: return "ZeroPrecoder";
        case ErrorCode::UnequalNoise: return "UnequalNoise";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace wlprec
