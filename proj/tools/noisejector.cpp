#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"
#include "noisejector/eval/protocol_check.hpp"
#include "noisejector/harness/ablate.hpp"
#include "noisejector/harness/bench.hpp"
#include "noisejector/harness/run.hpp"
#include "noisejector/simd/kernels.hpp"

namespace nj = noisejector;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.push_back(text.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        nj::fail(nj::ErrorCode::Usage, fmt::format("{}: '{}' is not a number", what, text));
    return v;
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    nj::fail(nj::ErrorCode::Usage, fmt::format("--pessimistic expects true or false, got '{}'", text));
}

void apply_weights(const std::string& text, nj::CriterionConfig& cfg) {
    const auto parts = split(text, ',');
    if (parts.size() != 3) nj::fail(nj::ErrorCode::Usage, "--weights expects Q,R,P");
    cfg.lambda_q = parse_double(parts[0], "--weights");
    cfg.lambda_r = parse_double(parts[1], "--weights");
    cfg.lambda_p = parse_double(parts[2], "--weights");
}

nj::optim::Hyperparams parse_hyperparams(const std::vector<std::string>& items) {
    nj::optim::Hyperparams out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            nj::fail(nj::ErrorCode::Usage, fmt::format("--hyperparam expects key=value, got '{}'", item));
        out[item.substr(0, eq)] = parse_double(item.substr(eq + 1), "--hyperparam");
    }
    return out;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("noisejector");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("NOISEJECTOR_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off
        if (level == spdlog::level::off && std::string_view(env) != "off")
            spdlog::warn("NOISEJECTOR_LOG='{}' is not a log level; using info", env);
        else
            spdlog::set_level(level);
    }
}

struct RunArgs {
    std::string evaluator;
    std::string optimizer = "dcma";
    std::string criterion = "c1";
    std::string pessimistic = "true";
    std::string weights = "1,1,1";
    std::size_t budget = 10'000;
    std::uint64_t seed = 0;
    std::string out;
    std::vector<std::string> hyperparams;
    bool no_evaluator_gradient = false;
    double handshake_timeout = 60.0;
    double eval_timeout = 600.0;
};

std::chrono::milliseconds to_millis(double seconds, std::string_view flag) {
    if (!(seconds > 0.0) || seconds > 1e7) nj::fail(nj::ErrorCode::Usage, fmt::format("{} must be positive seconds", flag));
    return std::chrono::milliseconds(static_cast<long long>(std::ceil(seconds * 1000.0)));
}

nj::harness::RunConfig to_run_config(const RunArgs& a) {
    nj::harness::RunConfig cfg;
    cfg.evaluator = a.evaluator;
    cfg.optimizer = nj::optim::parse_optimizer_kind(a.optimizer);
    cfg.criterion.variant = nj::parse_criterion_variant(a.criterion);
    cfg.criterion.pessimistic = parse_bool(a.pessimistic);
    apply_weights(a.weights, cfg.criterion);
    cfg.criterion.validate();
    if (a.budget == 0) nj::fail(nj::ErrorCode::Usage, "--budget must be positive");
    cfg.budget = a.budget;
    cfg.seed = a.seed;
    cfg.hyperparams = parse_hyperparams(a.hyperparams);
    cfg.evaluator_gradients = !a.no_evaluator_gradient;
    cfg.external.handshake_timeout = to_millis(a.handshake_timeout, "--handshake-timeout");
    cfg.external.eval_timeout = to_millis(a.eval_timeout, "--eval-timeout");
    return cfg;
}

void add_run_options(CLI::App* cmd, RunArgs& a, bool with_out) {
    cmd->add_option("--evaluator", a.evaluator, "builtin:NAME[:k=v,...] or exec:COMMAND")->required();
    cmd->add_option("--optimizer", a.optimizer, "dcma|cma|oneplusone|de|random|gd|adam")->capture_default_str();
    cmd->add_option("--criterion", a.criterion, "c1|c2")->capture_default_str();
    cmd->add_option("--pessimistic", a.pessimistic, "true|false")->capture_default_str();
    cmd->add_option("--weights", a.weights, "Q,R,P")->capture_default_str();
    cmd->add_option("--budget", a.budget, "criterion evaluations")->capture_default_str();
    cmd->add_option("--seed", a.seed)->capture_default_str();
    cmd->add_option("--hyperparam", a.hyperparams, "optimizer setting key=value (repeatable)");
    cmd->add_flag("--no-evaluator-gradient", a.no_evaluator_gradient,
                  "GD/Adam use finite differences even when the evaluator offers gradients");
    cmd->add_option("--handshake-timeout", a.handshake_timeout, "seconds, exec: evaluators")->capture_default_str();
    cmd->add_option("--eval-timeout", a.eval_timeout, "seconds per evaluation, exec: evaluators")->capture_default_str();
    if (with_out) cmd->add_option("--out", a.out, "report JSON path");
}

int cmd_run(const RunArgs& a) {
    const auto cfg = to_run_config(a);
    const auto report = nj::harness::run(cfg);
    if (!a.out.empty()) {
        const auto files = nj::harness::write_report(report, a.out, true);
        spdlog::info("wrote {} and {}", files.report.string(), files.z_file.string());
    }
    fmt::print("evaluator   {}\n", report.evaluator_id);
    fmt::print("optimizer   {} (seed {}, budget {})\n", nj::optim::to_string(cfg.optimizer), cfg.seed, cfg.budget);
    fmt::print("criterion   {:.10g}  (S_q {:.6g}, S_r {:.6g}, penalty {:.6g})\n", report.final.value,
               report.final.quality_score, report.final.realism_score, report.final.penalty);
    fmt::print("best at     evaluation {} of {}\n", report.recommended_evaluation, report.trace.size());
    fmt::print("wall time   {:.3f} s\n", report.wall_seconds);
    return 0;
}

struct BenchArgs {
    std::string suite = "separable";
    std::string optimizers;
    std::string criteria = "c1";
    std::size_t reps = 5;
    std::uint64_t master_seed = 0;
    std::string out_dir;
    std::size_t budget = 10'000;
    std::size_t dim = 0;
    std::size_t workers = 0;
    bool csv = false;
    std::string pessimistic = "true";
    std::string weights = "1,1,1";
};

int cmd_bench(const BenchArgs& a) {
    nj::harness::BenchConfig cfg;
    cfg.suite = nj::harness::parse_suite(a.suite);
    if (!a.optimizers.empty()) {
        cfg.optimizers.clear();
        for (const auto& name : split(a.optimizers, ',')) cfg.optimizers.push_back(nj::optim::parse_optimizer_kind(name));
    }
    cfg.criteria.clear();
    for (const auto& name : split(a.criteria, ',')) cfg.criteria.push_back(nj::parse_criterion_variant(name));
    cfg.reps = a.reps;
    cfg.master_seed = a.master_seed;
    cfg.budget = a.budget;
    if (a.dim != 0) cfg.dimension = a.dim;
    cfg.workers = a.workers;
    cfg.out_dir = a.out_dir;
    cfg.csv = a.csv;
    nj::CriterionConfig crit;
    crit.pessimistic = parse_bool(a.pessimistic);
    apply_weights(a.weights, crit);
    crit.validate();
    cfg.pessimistic = crit.pessimistic;
    cfg.lambda_q = crit.lambda_q;
    cfg.lambda_r = crit.lambda_r;
    cfg.lambda_p = crit.lambda_p;
    if (cfg.csv && cfg.out_dir.empty()) nj::fail(nj::ErrorCode::Usage, "--csv needs --out-dir");

    const auto result = nj::harness::bench(cfg);
    fmt::print("{}", nj::harness::bench_table(result));
    if (result.failed_cells() != 0) {
        spdlog::error("{} bench cell(s) had failed runs", result.failed_cells());
        return 6;
    }
    return 0;
}

int cmd_ablate(const RunArgs& a, const std::string& out_dir) {
    const auto cfg = to_run_config(a);
    const auto runs = nj::harness::ablate(cfg, out_dir);
    fmt::print("{}", nj::harness::ablate_table(runs));
    return 0;
}

int cmd_protocol_check(const std::string& evaluator, double timeout_s) {
    constexpr std::string_view exec = "exec:";
    if (!evaluator.starts_with(exec)) nj::fail(nj::ErrorCode::Usage, "protocol-check needs --evaluator exec:COMMAND");
    if (!(timeout_s > 0.0)) nj::fail(nj::ErrorCode::Usage, "--timeout must be positive");
    nj::eval::ProtocolCheckOptions options;
    const auto ms = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    options.handshake_timeout = std::min(options.handshake_timeout, ms);
    options.reply_timeout = std::min(options.reply_timeout, ms);
    const auto report = nj::eval::run_protocol_check(evaluator.substr(exec.size()), options);
    for (const auto& check : report.checks)
        fmt::print("{:<5} {:<16} {}\n", nj::eval::to_string(check.status), check.name, check.detail);
    fmt::print("{}\n", report.passed() ? "protocol-check passed" : "protocol-check FAILED");
    return report.passed() ? 0 : nj::exit_code_for(nj::ErrorCode::Protocol);
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Inference-time noise optimization for super-resolution generators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "noisejector 1.0");

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Optimize the noise of one evaluator");
    add_run_options(run_cmd, run_args, true);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Optimizer x criterion matrix on a synthetic suite");
    bench_cmd->add_option("--suite", bench_args.suite, "separable|rotated|plateau")->capture_default_str();
    bench_cmd->add_option("--optimizers", bench_args.optimizers, "comma list (default: all)");
    bench_cmd->add_option("--criteria", bench_args.criteria, "comma list of c1,c2")->capture_default_str();
    bench_cmd->add_option("--reps", bench_args.reps)->capture_default_str();
    bench_cmd->add_option("--master-seed", bench_args.master_seed)->capture_default_str();
    bench_cmd->add_option("--out-dir", bench_args.out_dir);
    bench_cmd->add_option("--budget", bench_args.budget)->capture_default_str();
    bench_cmd->add_option("--dim", bench_args.dim, "suite dimension (default: 50 separable, 10 otherwise)");
    bench_cmd->add_option("--workers", bench_args.workers, "parallel runs (default: cores)");
    bench_cmd->add_flag("--csv", bench_args.csv, "also write bench.csv");
    bench_cmd->add_option("--pessimistic", bench_args.pessimistic, "true|false")->capture_default_str();
    bench_cmd->add_option("--weights", bench_args.weights, "Q,R,P")->capture_default_str();

    RunArgs ablate_args;
    std::string ablate_out;
    auto* ablate_cmd = app.add_subcommand("ablate", "Weight/pessimism ablation grid around one config");
    add_run_options(ablate_cmd, ablate_args, false);
    ablate_cmd->add_option("--out-dir", ablate_out);

    std::string check_evaluator;
    double check_timeout = 60.0;
    auto* check_cmd = app.add_subcommand("protocol-check", "Conformance suite for an external evaluator");
    check_cmd->add_option("--evaluator", check_evaluator, "exec:COMMAND")->required();
    check_cmd->add_option("--timeout", check_timeout, "seconds per reply")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nj::exit_code_for(nj::ErrorCode::Usage);
    }

    spdlog::debug("kernels: {}", nj::simd::to_string(nj::simd::kernels().isa));
    try {
        if (*run_cmd) return cmd_run(run_args);
        if (*bench_cmd) return cmd_bench(bench_args);
        if (*ablate_cmd) return cmd_ablate(ablate_args, ablate_out);
        if (*check_cmd) return cmd_protocol_check(check_evaluator, check_timeout);
    } catch (const nj::Error& e) {
        spdlog::error("{}: {}", nj::to_string(e.code()), e.what());
        return nj::exit_code_for(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
