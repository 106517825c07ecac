#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "noisejector/eval/child_process.hpp"
#include "noisejector/eval/evaluator.hpp"
#include "noisejector/eval/protocol.hpp"

namespace noisejector::eval {

struct ExternalOptions {
    std::chrono::milliseconds handshake_timeout{60'000};
    std::chrono::milliseconds eval_timeout{600'000};
    // In-flight requests per batch; lowered to the evaluator's declared window.
    std::size_t window = 4;
    // Evaluate z = 0 after the handshake and require the declared baseline.
    bool verify_baseline = true;
    std::chrono::milliseconds shutdown_timeout{5'000};
};

// Client for an evaluator process speaking the line protocol. Requests are
// multiplexed over one child by id; calls are serialized by an internal mutex.
// Any failure mid-exchange leaves the handle unusable.
class ExternalEvaluator final : public Evaluator {
public:
    // Errors: Spawn (fork failure, or the shell could not run the command),
    // Timeout, Protocol, ChildExit.
    static std::unique_ptr<ExternalEvaluator> open(const std::string& command, const ExternalOptions& options);
    ~ExternalEvaluator() override;

    std::size_t dimension() const noexcept override { return info_.dimension; }
    std::size_t patch_count() const noexcept override { return info_.patches; }
    const Baseline& baseline() const noexcept override { return info_.baseline; }
    Capabilities capabilities() const noexcept override;
    std::string id() const override { return "exec:" + command_; }

    RawEvaluation evaluate(std::span<const double> z) override;
    std::vector<RawEvaluation> evaluate_batch(std::span<const NoiseVector> batch) override;
    criterion::RawGradient gradient(std::span<const double> z) override;

    std::string captured_log() const override;

    // Sends shutdown, closes stdin and waits for the exit status (the child is
    // killed after the shutdown timeout). Idempotent.
    std::optional<int> shutdown();

    const protocol::InitInfo& init_info() const noexcept { return info_; }

private:
    ExternalEvaluator(const std::string& command, const ExternalOptions& options);
    void handshake();
    std::vector<RawEvaluation> exchange(std::span<const NoiseVector> batch);
    protocol::Json read_message(std::chrono::milliseconds timeout, std::string_view waiting_for);
    [[noreturn]] void reply_error(const protocol::Json& message);
    void check_usable() const;

    std::string command_;
    ExternalOptions options_;
    std::unique_ptr<ChildProcess> child_;
    protocol::InitInfo info_;
    std::uint64_t next_id_ = 1;
    bool broken_ = false;
    bool closed_ = false;
    mutable std::mutex mutex_;
};

}  // namespace noisejector::eval
