#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noisejector {

enum class ErrorCode {
    Usage,
    InputContract,
    DimensionMismatch,
    NonFiniteValue,
    BudgetExhausted,
    UnknownCandidate,
    NoRecommendation,
    Unsupported,
    Spawn,
    Protocol,
    Timeout,
    ChildExit,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Process exit status used by the CLI for an error of this kind.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace noisejector
