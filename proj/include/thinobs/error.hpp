#ifndef THINOBS_ERROR_HPP
#define THINOBS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace thinobs {

enum class ErrorCode {
    InvalidArgument,
    DegenerateNormal,
    ZeroWindow,
    EmptySample,
    ZeroFrequency,
    EmptyGamma,
    NoConvergence,
    NotSupported,
    ResolutionLost,
    InfeasibleObstacle,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::ZeroWindow: return "ZeroWindow";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ZeroFrequency: return "ZeroFrequency";
    case ErrorCode::EmptyGamma: return "EmptyGamma";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotSupported: return "NotSupported";
    case ErrorCode::ResolutionLost: return "ResolutionLost";
    case ErrorCode::InfeasibleObstacle: return "InfeasibleObstacle";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace thinobs

#endif
