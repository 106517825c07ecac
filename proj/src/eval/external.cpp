#include "noisejector/eval/external.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"

namespace noisejector::eval {

std::unique_ptr<ExternalEvaluator> ExternalEvaluator::open(const std::string& command,
                                                           const ExternalOptions& options) {
    std::unique_ptr<ExternalEvaluator> handle(new ExternalEvaluator(command, options));
    handle->handshake();
    return handle;
}

ExternalEvaluator::ExternalEvaluator(const std::string& command, const ExternalOptions& options)
    : command_(command), options_(options) {
    if (options_.window == 0) fail(ErrorCode::Usage, "evaluator window must be positive");
    child_ = std::make_unique<ChildProcess>(command_);
}

ExternalEvaluator::~ExternalEvaluator() {
    try {
        shutdown();
    } catch (const std::exception& e) {
        spdlog::warn("evaluator shutdown failed: {}", e.what());
    }
}

void ExternalEvaluator::handshake() {
    try {
        child_->write_line(protocol::encode_init(), options_.handshake_timeout);
        const auto message = read_message(options_.handshake_timeout, "init_ok");
        if (protocol::message_type(message) == "error") reply_error(message);
        info_ = protocol::parse_init_ok(message);
    } catch (const Error& e) {
        broken_ = true;
        const auto status = child_->exit_status();
        // 126/127: the shell could not find or execute the command
        if (e.code() == ErrorCode::ChildExit && status && (*status == 126 || *status == 127))
            fail(ErrorCode::Spawn, fmt::format("could not start evaluator '{}': {}", command_, e.what()));
        throw;
    }
    spdlog::debug("evaluator handshake: dim={} patches={} gradient={}", info_.dimension, info_.patches,
                  info_.supports_gradient);

    if (options_.verify_baseline) {
        const NoiseVector zero(info_.dimension);
        const RawEvaluation at_zero = evaluate(zero.span());
        const Baseline observed = Baseline::from_evaluation(at_zero, info_.baseline.blur);
        if (observed.quality0 != info_.baseline.quality0 || observed.realism0 != info_.baseline.realism0) {
            broken_ = true;
            fail(ErrorCode::Protocol,
                 fmt::format("evaluate(0) gave quality {} / min realism {}, handshake declared {} / {}",
                             observed.quality0, observed.realism0, info_.baseline.quality0, info_.baseline.realism0));
        }
    }
}

Capabilities ExternalEvaluator::capabilities() const noexcept {
    return {info_.supports_gradient, true, std::min(options_.window, info_.window.value_or(options_.window))};
}

void ExternalEvaluator::check_usable() const {
    if (closed_) fail(ErrorCode::Protocol, "evaluator has been shut down");
    if (broken_) fail(ErrorCode::Protocol, "evaluator is unusable after an earlier failure");
}

protocol::Json ExternalEvaluator::read_message(std::chrono::milliseconds timeout, std::string_view waiting_for) {
    const auto line = child_->read_line(timeout);
    if (!line)
        fail(ErrorCode::Timeout, fmt::format("no {} from evaluator within {} s", waiting_for, timeout.count() / 1000.0));
    return protocol::parse_line(*line);
}

void ExternalEvaluator::reply_error(const protocol::Json& message) {
    const auto reply = protocol::parse_error(message);
    const std::string text = fmt::format("evaluator error '{}'{}{}", reply.code, reply.message.empty() ? "" : ": ",
                                         reply.message);
    if (reply.code == "unsupported") fail(ErrorCode::Unsupported, text);
    fail(ErrorCode::Protocol, text);
}

RawEvaluation ExternalEvaluator::evaluate(std::span<const double> z) {
    check_dimension(z);
    const NoiseVector one(std::vector<double>(z.begin(), z.end()));
    return evaluate_batch(std::span<const NoiseVector>(&one, 1)).front();
}

std::vector<RawEvaluation> ExternalEvaluator::evaluate_batch(std::span<const NoiseVector> batch) {
    for (const auto& z : batch) check_dimension(z.span());
    const std::lock_guard lock(mutex_);
    check_usable();
    try {
        return exchange(batch);
    } catch (...) {
        broken_ = true;
        throw;
    }
}

std::vector<RawEvaluation> ExternalEvaluator::exchange(std::span<const NoiseVector> batch) {
    const std::size_t window = capabilities().parallelism;
    std::vector<std::optional<RawEvaluation>> results(batch.size());
    std::unordered_map<std::uint64_t, std::size_t> in_flight;
    std::size_t sent = 0;
    std::size_t received = 0;

    while (received < batch.size()) {
        while (sent < batch.size() && in_flight.size() < window) {
            const std::uint64_t id = next_id_++;
            child_->write_line(protocol::encode_eval(id, batch[sent].span()), options_.eval_timeout);
            in_flight.emplace(id, sent++);
        }
        const auto message = read_message(options_.eval_timeout, "eval_ok");
        const std::string type = protocol::message_type(message);
        if (type == "error") {
            const auto id = protocol::optional_id(message);
            if (id && !in_flight.contains(*id))
                fail(ErrorCode::Protocol, fmt::format("error reply for unknown id {}", *id));
            reply_error(message);
        }
        const std::uint64_t id = protocol::message_id(message);
        const auto it = in_flight.find(id);
        if (it == in_flight.end())
            fail(ErrorCode::Protocol, fmt::format("evaluator replied with id {}, which is not in flight", id));
        results[it->second] = protocol::parse_eval_ok(message, info_.patches);
        in_flight.erase(it);
        ++received;
    }

    std::vector<RawEvaluation> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

criterion::RawGradient ExternalEvaluator::gradient(std::span<const double> z) {
    check_dimension(z);
    if (!info_.supports_gradient) return Evaluator::gradient(z);
    const std::lock_guard lock(mutex_);
    check_usable();
    try {
        const std::uint64_t id = next_id_++;
        child_->write_line(protocol::encode_grad(id, z), options_.eval_timeout);
        const auto message = read_message(options_.eval_timeout, "grad_ok");
        if (protocol::message_type(message) == "error") {
            if (protocol::optional_id(message) != id) fail(ErrorCode::Protocol, "error reply with a mismatched id");
            reply_error(message);
        }
        if (protocol::message_id(message) != id)
            fail(ErrorCode::Protocol, fmt::format("grad reply id {} does not match request {}",
                                                  protocol::message_id(message), id));
        return protocol::parse_grad_ok(message, info_.dimension);
    } catch (const Error& e) {
        // an unsupported gradient leaves the exchange in a consistent state
        if (e.code() != ErrorCode::Unsupported) broken_ = true;
        throw;
    } catch (...) {
        broken_ = true;
        throw;
    }
}

std::string ExternalEvaluator::captured_log() const {
    const std::lock_guard lock(mutex_);
    return child_ ? child_->captured_stderr() : std::string{};
}

std::optional<int> ExternalEvaluator::shutdown() {
    const std::lock_guard lock(mutex_);
    if (!child_) return std::nullopt;
    if (closed_) return child_->exit_status();
    closed_ = true;
    if (!broken_ && child_->running()) {
        try {
            child_->write_line(protocol::encode_shutdown(), options_.shutdown_timeout);
        } catch (const Error& e) {
            spdlog::debug("shutdown message not delivered: {}", e.what());
        }
    }
    child_->close_stdin();
    auto status = child_->wait_exit(broken_ ? std::chrono::milliseconds(200) : options_.shutdown_timeout);
    if (!status) {
        spdlog::warn("evaluator did not exit after shutdown; killing pid {}", child_->pid());
        child_->kill();
        status = child_->exit_status();
    }
    return status;
}

}  // namespace noisejector::eval
