#include "noisejector/error.hpp"

namespace noisejector {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Usage: return "usage";
        case ErrorCode::InputContract: return "input_contract";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::NonFiniteValue: return "non_finite";
        case ErrorCode::BudgetExhausted: return "budget_exhausted";
        case ErrorCode::UnknownCandidate: return "unknown_candidate";
        case ErrorCode::NoRecommendation: return "no_recommendation";
        case ErrorCode::Unsupported: return "unsupported";
        case ErrorCode::Spawn: return "spawn";
        case ErrorCode::Protocol: return "protocol";
        case ErrorCode::Timeout: return "timeout";
        case ErrorCode::ChildExit: return "child_exit";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Usage: return 2;
        case ErrorCode::Spawn: return 3;
        case ErrorCode::Protocol:
        case ErrorCode::ChildExit: return 4;
        case ErrorCode::Timeout: return 5;
        default: return 1;
    }
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace noisejector
