// Conformance fixture speaking the evaluator line protocol.
//
//   quality(z)   = 10 - sum_i (z_i - 0.1)^2
//   patch_j(z)   = 1 - sum_{i mod 3 == j} z_i^2 - 0.01 j
//
// Misbehaviour switches exist so the client's error paths can be exercised.

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

using Json = nlohmann::json;

namespace {

struct Options {
    std::size_t dim = 8;
    std::size_t patches = 3;
    bool gradient = false;
    bool wrong_id = false;
    long exit_after = -1;
    bool hang = false;
    bool bad_baseline = false;
    bool nonfinite = false;
    bool reverse = false;
    std::size_t window = 0;
    bool chatter = false;
    bool ignore_shutdown = false;
};

double quality(const std::vector<double>& z) {
    double loss = 0.0;
    for (double v : z) loss += (v - 0.1) * (v - 0.1);
    return 10.0 - loss;
}

std::vector<double> patches(const std::vector<double>& z, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) out[j] = 1.0 - 0.01 * static_cast<double>(j);
    for (std::size_t i = 0; i < z.size(); ++i) out[i % count] -= z[i] * z[i];
    return out;
}

class LineReader {
public:
    // Blocks for the next line; nullopt at EOF.
    std::optional<std::string> next() {
        for (;;) {
            const auto pos = buffer_.find('\n');
            if (pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            if (eof_) {
                if (buffer_.empty()) return std::nullopt;
                std::string line;
                line.swap(buffer_);
                return line;
            }
            fill();
        }
    }

    // True if a complete line is buffered or arrives within `ms`.
    bool pending(int ms) {
        if (buffer_.find('\n') != std::string::npos || eof_) return true;
        pollfd p{STDIN_FILENO, POLLIN, 0};
        if (::poll(&p, 1, ms) <= 0) return false;
        fill();
        return true;
    }

private:
    void fill() {
        char buf[65536];
        const ssize_t n = ::read(STDIN_FILENO, buf, sizeof(buf));
        if (n <= 0) eof_ = true;
        else buffer_.append(buf, static_cast<std::size_t>(n));
    }

    std::string buffer_;
    bool eof_ = false;
};

void send(const Json& message) {
    const std::string line = message.dump() + "\n";
    std::fwrite(line.data(), 1, line.size(), stdout);
    std::fflush(stdout);
}

Json error_reply(const Json& id, const std::string& code, const std::string& text) {
    return {{"type", "error"}, {"id", id}, {"code", code}, {"message", text}};
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Echo evaluator for protocol conformance tests"};
    app.add_option("--dim", opt.dim)->check(CLI::PositiveNumber);
    app.add_option("--patches", opt.patches)->check(CLI::PositiveNumber);
    app.add_flag("--gradient", opt.gradient, "declare and answer gradient requests");
    app.add_flag("--wrong-id", opt.wrong_id, "echo id + 1000 on eval replies");
    app.add_option("--exit-after", opt.exit_after, "exit with status 3 after N eval replies");
    app.add_flag("--hang", opt.hang, "never answer eval requests");
    app.add_flag("--bad-baseline", opt.bad_baseline, "declare a baseline eval(0) does not reproduce");
    app.add_flag("--nonfinite", opt.nonfinite, "report NaN quality for z != 0");
    app.add_flag("--reverse", opt.reverse, "answer queued eval requests newest first");
    app.add_option("--window", opt.window, "declared in-flight window (0: not declared)");
    app.add_flag("--chatter", opt.chatter, "log every request to stderr");
    app.add_flag("--ignore-shutdown", opt.ignore_shutdown, "keep running after shutdown until EOF");
    CLI11_PARSE(app, argc, argv);

    std::fprintf(stderr, "echo evaluator: dim=%zu patches=%zu gradient=%d\n", opt.dim, opt.patches,
                 opt.gradient ? 1 : 0);

    const std::vector<double> zero(opt.dim, 0.0);
    const double q0 = quality(zero) + (opt.bad_baseline ? 1.0 : 0.0);
    const auto p0 = patches(zero, opt.patches);
    const double r0 = *std::min_element(p0.begin(), p0.end());

    LineReader reader;
    std::vector<Json> queued;
    long replies = 0;

    auto answer_eval = [&](const Json& request) {
        const auto z = request.at("z").get<std::vector<double>>();
        Json id = request.at("id");
        if (opt.wrong_id) id = id.get<std::uint64_t>() + 1000;
        double q = quality(z);
        if (opt.nonfinite && std::any_of(z.begin(), z.end(), [](double v) { return v != 0.0; }))
            q = std::numeric_limits<double>::quiet_NaN();
        send({{"type", "eval_ok"}, {"id", id}, {"quality", q}, {"realism_patches", patches(z, opt.patches)}});
        if (opt.exit_after >= 0 && ++replies >= opt.exit_after) {
            std::fprintf(stderr, "echo evaluator: exiting after %ld replies\n", replies);
            std::exit(3);
        }
    };
    auto flush_queue = [&] {
        for (auto it = queued.rbegin(); it != queued.rend(); ++it) answer_eval(*it);
        queued.clear();
    };

    while (auto line = reader.next()) {
        if (line->empty()) continue;
        if (opt.chatter) std::fprintf(stderr, "echo evaluator: request %.60s\n", line->c_str());
        const Json request = Json::parse(*line, nullptr, false);
        if (request.is_discarded() || !request.is_object() || !request.contains("type") ||
            !request["type"].is_string()) {
            send(error_reply(nullptr, "malformed", "request is not a JSON object with a type"));
            continue;
        }
        const std::string type = request["type"].get<std::string>();
        const Json id = request.contains("id") ? request["id"] : Json(nullptr);

        if (type == "init") {
            Json reply{{"type", "init_ok"},          {"dim", opt.dim},      {"patches", opt.patches},
                       {"baseline_quality", q0},     {"baseline_realism", r0}, {"blur", 0.125},
                       {"supports_gradient", opt.gradient}};
            if (opt.window != 0) reply["window"] = opt.window;
            send(reply);
        } else if (type == "shutdown") {
            flush_queue();
            if (!opt.ignore_shutdown) return 0;
        } else if (type == "eval" || type == "grad") {
            if (!id.is_number_unsigned() || !request.contains("z") || !request["z"].is_array()) {
                send(error_reply(id, "malformed", "eval/grad needs an id and z"));
                continue;
            }
            if (request["z"].size() != opt.dim) {
                send(error_reply(id, "dimension", "z has the wrong length"));
                continue;
            }
            if (type == "grad") {
                if (!opt.gradient) {
                    send(error_reply(id, "unsupported", "no gradients"));
                    continue;
                }
                const auto z = request["z"].get<std::vector<double>>();
                const auto p = patches(z, opt.patches);
                const auto weakest = static_cast<std::size_t>(std::min_element(p.begin(), p.end()) - p.begin());
                std::vector<double> gq(opt.dim), gr(opt.dim, 0.0);
                for (std::size_t i = 0; i < opt.dim; ++i) {
                    gq[i] = -2.0 * (z[i] - 0.1);
                    if (i % opt.patches == weakest) gr[i] = -2.0 * z[i];
                }
                send({{"type", "grad_ok"}, {"id", id}, {"g", gq}, {"g_realism", gr}});
                continue;
            }
            if (opt.hang) continue;
            if (opt.reverse) {
                queued.push_back(request);
                if (!reader.pending(50)) flush_queue();
                continue;
            }
            answer_eval(request);
        } else {
            send(error_reply(id, "unknown_type", "unknown message type " + type));
        }
    }
    flush_queue();
    return 0;
}
