#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace noisejector::eval {

enum class CheckStatus { Pass, Fail, Skip };

std::string_view to_string(CheckStatus status) noexcept;

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Skip;
    std::string detail;
};

struct ProtocolCheckOptions {
    std::chrono::milliseconds handshake_timeout{60'000};
    std::chrono::milliseconds reply_timeout{600'000};
};

struct ProtocolCheckReport {
    std::vector<CheckResult> checks;
    std::string stderr_log;
    bool passed() const noexcept;
};

// Conformance suite for an external evaluator: handshake, baseline
// consistency, id echo with interleaved non-sequential ids, error replies
// for a malformed line and a wrong-length z, recovery afterwards, gradient
// (when declared) and a clean exit on shutdown.
ProtocolCheckReport run_protocol_check(const std::string& command, const ProtocolCheckOptions& options = {});

}  // namespace noisejector::eval
