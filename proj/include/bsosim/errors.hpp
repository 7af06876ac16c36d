#pragma once

#include <stdexcept>
#include <string>

namespace bsosim {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// dynamics
struct StepTooCoarse : Error {
    explicit StepTooCoarse(const std::string& msg) : Error(msg) {}
};
struct NotNormalized : Error {
    explicit NotNormalized(const std::string& msg) : Error(msg) {}
};
struct PerturbativeRegimeViolated : Error {
    explicit PerturbativeRegimeViolated(const std::string& msg) : Error(msg) {}
};
struct TruncationTooSmall : Error {
    explicit TruncationTooSmall(const std::string& msg) : Error(msg) {}
};

// protocol
struct RwaFlagMissing : Error {
    explicit RwaFlagMissing(const std::string& msg) : Error(msg) {}
};
struct WrongStateShape : Error {
    explicit WrongStateShape(const std::string& msg) : Error(msg) {}
};
struct EmptyPostSelection : Error {
    explicit EmptyPostSelection(const std::string& msg) : Error(msg) {}
};

// channel
struct ChannelClosed : Error {
    explicit ChannelClosed(const std::string& msg) : Error(msg) {}
};

// locking
struct BadLayout : Error {
    explicit BadLayout(const std::string& msg) : Error(msg) {}
};
struct DegenerateProfile : Error {
    explicit DegenerateProfile(const std::string& msg) : Error(msg) {}
};

// cli
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};
struct UnknownKey : Error {
    explicit UnknownKey(const std::string& msg) : Error(msg) {}
};

} // namespace bsosim
