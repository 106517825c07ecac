#include "noisejector/eval/protocol_check.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/eval/child_process.hpp"
#include "noisejector/eval/protocol.hpp"

namespace noisejector::eval {

std::string_view to_string(CheckStatus status) noexcept {
    switch (status) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::Skip: return "skip";
    }
    return "unknown";
}

bool ProtocolCheckReport::passed() const noexcept {
    return !checks.empty() &&
           std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::Fail; });
}

namespace {

using protocol::Json;

class Session {
public:
    Session(const std::string& command, const ProtocolCheckOptions& options)
        : child_(std::make_unique<ChildProcess>(command)), options_(options) {}

    ChildProcess& child() { return *child_; }

    void send(std::string_view line) { child_->write_line(line, options_.reply_timeout); }

    Json receive(std::chrono::milliseconds timeout) {
        const auto line = child_->read_line(timeout);
        if (!line) fail(ErrorCode::Timeout, fmt::format("no reply within {} ms", timeout.count()));
        return protocol::parse_line(*line);
    }
    Json receive() { return receive(options_.reply_timeout); }

    const ProtocolCheckOptions& options() const { return options_; }

private:
    std::unique_ptr<ChildProcess> child_;
    ProtocolCheckOptions options_;
};

void expect(bool condition, const std::string& what) {
    if (!condition) fail(ErrorCode::Protocol, what);
}

}  // namespace

ProtocolCheckReport run_protocol_check(const std::string& command, const ProtocolCheckOptions& options) {
    ProtocolCheckReport report;
    std::unique_ptr<Session> session;
    protocol::InitInfo info;
    bool alive = false;

    // A failure that leaves the stream in an unknown state skips everything after it.
    auto run = [&](const std::string& name, const std::function<std::string()>& body) {
        CheckResult result{name, CheckStatus::Skip, "skipped after an earlier fatal failure"};
        if (alive) {
            try {
                result.detail = body();
                result.status = CheckStatus::Pass;
            } catch (const Error& e) {
                result.status = CheckStatus::Fail;
                result.detail = e.what();
                if (e.code() == ErrorCode::ChildExit || e.code() == ErrorCode::Timeout) alive = false;
            } catch (const std::exception& e) {
                result.status = CheckStatus::Fail;
                result.detail = e.what();
            }
        }
        report.checks.push_back(std::move(result));
    };

    try {
        session = std::make_unique<Session>(command, options);
        alive = true;
    } catch (const Error& e) {
        report.checks.push_back({"spawn", CheckStatus::Fail, e.what()});
        return report;
    }

    run("handshake", [&] {
        session->send(protocol::encode_init());
        info = protocol::parse_init_ok(session->receive(options.handshake_timeout));
        return fmt::format("dim={} patches={} gradient={}", info.dimension, info.patches, info.supports_gradient);
    });
    if (report.checks.back().status != CheckStatus::Pass) alive = false;

    const std::vector<double> zero(info.dimension, 0.0);

    run("baseline", [&] {
        session->send(protocol::encode_eval(7, zero));
        const Json reply = session->receive();
        expect(protocol::message_id(reply) == 7, "reply id does not echo request id 7");
        const RawEvaluation at_zero = protocol::parse_eval_ok(reply, info.patches);
        const Baseline observed = Baseline::from_evaluation(at_zero, info.baseline.blur);
        expect(observed.quality0 == info.baseline.quality0 && observed.realism0 == info.baseline.realism0,
               fmt::format("eval(0) = ({}, {}) differs from handshake baseline ({}, {})", observed.quality0,
                           observed.realism0, info.baseline.quality0, info.baseline.realism0));
        return std::string("eval(0) reproduces the handshake baseline");
    });

    run("id-echo", [&] {
        const std::vector<std::uint64_t> ids{1001, 42, 999983};
        std::map<std::uint64_t, double> sent;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            std::vector<double> z(info.dimension, 0.0);
            z[k % info.dimension] = 0.25 * static_cast<double>(k + 1);
            session->send(protocol::encode_eval(ids[k], z));
            sent.emplace(ids[k], 0.0);
        }
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const Json reply = session->receive();
            const auto id = protocol::message_id(reply);
            expect(sent.erase(id) == 1, fmt::format("reply id {} was not requested or was repeated", id));
            protocol::parse_eval_ok(reply, info.patches);
        }
        return std::string("ids 1001, 42, 999983 echoed");
    });

    run("malformed-line", [&] {
        session->send("this is not json");
        const Json reply = session->receive();
        expect(protocol::message_type(reply) == "error", "malformed request did not produce an error message");
        const auto err = protocol::parse_error(reply);
        expect(!err.code.empty(), "error message lacks a code");
        return fmt::format("error code '{}'", err.code);
    });

    run("wrong-dimension", [&] {
        const std::vector<double> z(info.dimension + 1, 0.0);
        session->send(protocol::encode_eval(55, z));
        const Json reply = session->receive();
        expect(protocol::message_type(reply) == "error", "wrong-length z did not produce an error message");
        const auto err = protocol::parse_error(reply);
        expect(err.id == 55, "error reply does not carry request id 55");
        expect(!err.code.empty(), "error message lacks a code");
        return fmt::format("error code '{}'", err.code);
    });

    run("recovery", [&] {
        session->send(protocol::encode_eval(56, zero));
        const Json reply = session->receive();
        expect(protocol::message_id(reply) == 56, "reply id does not echo request id 56");
        const RawEvaluation at_zero = protocol::parse_eval_ok(reply, info.patches);
        expect(at_zero.quality == info.baseline.quality0, "eval(0) changed after error replies");
        return std::string("evaluator keeps serving after error replies");
    });

    if (alive && !info.supports_gradient) {
        report.checks.push_back({"gradient", CheckStatus::Skip, "evaluator declares no gradient support"});
    } else {
        run("gradient", [&] {
            session->send(protocol::encode_grad(57, zero));
            const Json reply = session->receive();
            expect(protocol::message_id(reply) == 57, "reply id does not echo request id 57");
            protocol::parse_grad_ok(reply, info.dimension);
            return fmt::format("gradient of length {}", info.dimension);
        });
    }

    run("shutdown", [&] {
        session->send(protocol::encode_shutdown());
        session->child().close_stdin();
        const auto status = session->child().wait_exit(std::chrono::milliseconds(10'000));
        expect(status.has_value(), "evaluator still running 10 s after shutdown");
        expect(*status == 0, fmt::format("evaluator exited with status {}", *status));
        return std::string("exit status 0");
    });

    report.stderr_log = session->child().captured_stderr();
    return report;
}

}  // namespace noisejector::eval
