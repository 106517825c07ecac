#include "noisejector/harness/run.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"

namespace noisejector::harness {

namespace {

using Json = nlohmann::json;

void check_config(const RunConfig& config) {
    if (config.budget == 0) fail(ErrorCode::Usage, "budget must be positive");
    config.criterion.validate();
}

double squared_norm_over_d(std::span<const double> z) {
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return z.empty() ? 0.0 : sq / static_cast<double>(z.size());
}

}  // namespace

RunReport run(const RunConfig& config) {
    check_config(config);
    if (config.evaluator.empty()) fail(ErrorCode::Usage, "no evaluator given");
    auto evaluator = eval::open_evaluator(config.evaluator, config.external);
    return run(config, *evaluator);
}

RunReport run(const RunConfig& config, eval::Evaluator& evaluator) {
    check_config(config);
    const auto started = std::chrono::steady_clock::now();

    RunReport report;
    report.config = config;
    report.evaluator_id = evaluator.id();
    report.dimension = evaluator.dimension();
    report.baseline = evaluator.baseline();
    report.baseline.validate();

    const bool gradient_method =
        config.optimizer == optim::OptimizerKind::GD || config.optimizer == optim::OptimizerKind::Adam;
    optim::OptimizerSpec spec;
    spec.kind = config.optimizer;
    spec.dimension = report.dimension;
    spec.budget = config.budget;
    spec.seed = config.seed;
    spec.hyperparams = config.hyperparams;
    spec.evaluator_gradient =
        gradient_method && config.evaluator_gradients && evaluator.capabilities().supports_gradient;
    auto optimizer = optim::make_optimizer(spec);
    spdlog::debug("run: optimizer={} d={} budget={} seed={} evaluator-gradient={}", to_string(config.optimizer),
                  spec.dimension, spec.budget, spec.seed, spec.evaluator_gradient);

    report.trace.reserve(config.budget);
    std::optional<std::size_t> best_index;
    double best_value = 0.0;

    while (!optimizer->exhausted()) {
        const auto batch = optimizer->ask();
        const auto raw = evaluator.evaluate_batch(batch);
        std::vector<optim::Evaluated> told;
        told.reserve(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            raw[k].validate();
            const auto breakdown = criterion::evaluate(batch[k].span(), raw[k], report.baseline, config.criterion);
            const std::size_t index = report.trace.size();
            if (!best_index || breakdown.value > best_value) {
                best_index = index;
                best_value = breakdown.value;
                report.final = breakdown;
                report.final_raw = raw[k];
            }
            report.trace.push_back({index, breakdown.value, best_value});
            told.push_back({batch[k], breakdown.value});
        }
        optimizer->tell(told);

        if (optimizer->wants_gradient()) {
            const NoiseVector& z = batch.front();
            const auto g = evaluator.gradient(z.span());
            ++report.gradient_calls;
            optimizer->tell_gradient(
                criterion::criterion_gradient(z.span(), raw.front(), g, report.baseline, config.criterion));
        }
    }

    const auto& best = optimizer->best();
    if (!best || best->evaluation != *best_index || best->value != best_value)
        fail(ErrorCode::InputContract, "optimizer best-so-far disagrees with the run trace");
    report.recommended = optimizer->recommend();
    report.recommended_evaluation = *best_index;
    report.diagnostics = optimizer->diagnostics();
    report.evaluator_log = evaluator.captured_log();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

ReportFiles report_files(const std::filesystem::path& report_path) {
    ReportFiles files;
    files.report = report_path;
    auto stem = report_path;
    stem.replace_extension();
    files.z_file = stem.string() + ".z.bin";
    files.log_file = stem.string() + ".stderr.log";
    return files;
}

Json report_json(const RunReport& report, const ReportFiles& files, bool include_timing) {
    const auto& cfg = report.config;
    Json hyper = Json::object();
    for (const auto& [key, value] : cfg.hyperparams) hyper[key] = value;

    Json trace = Json::array();
    for (const auto& p : report.trace) trace.push_back(Json::array({p.index, p.value, p.best}));

    Json doc;
    doc["schema"] = kRunReportSchema;
    doc["schema_version"] = kReportSchemaVersion;
    doc["spec"] = {
        {"optimizer", to_string(cfg.optimizer)},
        {"seed", cfg.seed},
        {"budget", cfg.budget},
        {"evaluator", report.evaluator_id},
        {"dimension", report.dimension},
        {"hyperparams", hyper},
        {"criterion",
         {{"variant", to_string(cfg.criterion.variant)},
          {"pessimistic", cfg.criterion.pessimistic},
          {"lambda_q", cfg.criterion.lambda_q},
          {"lambda_r", cfg.criterion.lambda_r},
          {"lambda_p", cfg.criterion.lambda_p}}},
    };
    doc["baseline"] = {{"quality", report.baseline.quality0},
                       {"realism", report.baseline.realism0},
                       {"blur", report.baseline.blur}};
    doc["trace"] = std::move(trace);
    doc["final"] = {
        {"z_file", files.z_file.filename().string()},
        {"z_length", report.recommended.size()},
        {"evaluation", report.recommended_evaluation},
        {"value", report.final.value},
        {"quality_score", report.final.quality_score},
        {"realism_score", report.final.realism_score},
        {"penalty", report.final.penalty},
        {"z_sq_over_d", squared_norm_over_d(report.recommended.span())},
        {"raw_quality", report.final_raw.quality},
        {"raw_min_patch", report.final_raw.realism_patches.empty() ? 0.0 : report.final_raw.min_patch()},
    };
    doc["diagnostics"] = {{"sigma", report.diagnostics.sigma},
                          {"generation", report.diagnostics.generation},
                          {"clamp_events", report.diagnostics.clamp_events},
                          {"gradient_calls", report.gradient_calls}};
    doc["evaluator_log"] = report.evaluator_log.empty() ? Json(nullptr) : Json(files.log_file.filename().string());
    if (include_timing) doc["wall_time_s"] = report.wall_seconds;
    return doc;
}

ReportFiles write_report(const RunReport& report, const std::filesystem::path& report_path, bool include_timing) {
    const auto files = report_files(report_path);
    if (files.report.has_parent_path()) std::filesystem::create_directories(files.report.parent_path());
    write_text_file(files.report, report_json(report, files, include_timing).dump(2) + "\n");
    write_z_file(files.z_file, report.recommended.span());
    if (!report.evaluator_log.empty()) write_text_file(files.log_file, report.evaluator_log);
    return files;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fail(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
}

namespace {

void put_le(std::string& out, std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU));
}

std::uint64_t get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return bits;
}

}  // namespace

void write_z_file(const std::filesystem::path& path, std::span<const double> z) {
    std::string bytes;
    bytes.reserve(8 * (z.size() + 1));
    put_le(bytes, z.size());
    for (double v : z) put_le(bytes, std::bit_cast<std::uint64_t>(v));
    write_text_file(path, bytes);
}

std::vector<double> read_z_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, fmt::format("cannot read '{}'", path.string()));
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 8) fail(ErrorCode::Io, fmt::format("'{}' is too short", path.string()));
    const std::uint64_t n = get_le(p);
    if (bytes.size() != 8 * (n + 1))
        fail(ErrorCode::Io, fmt::format("'{}' declares {} values but holds {} bytes", path.string(), n, bytes.size()));
    std::vector<double> z(n);
    for (std::uint64_t i = 0; i < n; ++i) z[i] = std::bit_cast<double>(get_le(p + 8 * (i + 1)));
    return z;
}

}  // namespace noisejector::harness
