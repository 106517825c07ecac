#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisejector/criterion/criterion.hpp"
#include "noisejector/criterion/types.hpp"
#include "noisejector/eval/external.hpp"
#include "noisejector/eval/evaluator.hpp"
#include "noisejector/optim/optimizer.hpp"

namespace noisejector::harness {

inline constexpr const char* kRunReportSchema = "noisejector.run_report";
inline constexpr int kReportSchemaVersion = 1;

struct RunConfig {
    std::string evaluator;  // locator, see eval::open_evaluator
    optim::OptimizerKind optimizer = optim::OptimizerKind::DCMA;
    CriterionConfig criterion;
    std::size_t budget = 10'000;
    std::uint64_t seed = 0;
    optim::Hyperparams hyperparams;
    // GD/Adam step on evaluator gradients when the evaluator offers them.
    bool evaluator_gradients = true;
    // Timeouts and window for exec: evaluators.
    eval::ExternalOptions external;
};

struct TracePoint {
    std::size_t index = 0;
    double value = 0.0;
    double best = 0.0;
};

struct RunReport {
    RunConfig config;
    std::string evaluator_id;
    std::size_t dimension = 0;
    Baseline baseline;
    std::vector<TracePoint> trace;

    NoiseVector recommended;
    std::size_t recommended_evaluation = 0;
    criterion::Breakdown final;
    RawEvaluation final_raw;

    optim::Diagnostics diagnostics;
    std::size_t gradient_calls = 0;
    double wall_seconds = 0.0;
    std::string evaluator_log;
};

// Opens the evaluator named by config.evaluator. Budget 0 is a Usage error
// raised before the evaluator is started.
RunReport run(const RunConfig& config);
RunReport run(const RunConfig& config, eval::Evaluator& evaluator);

struct ReportFiles {
    std::filesystem::path report;
    std::filesystem::path z_file;     // <stem>.z.bin
    std::filesystem::path log_file;   // <stem>.stderr.log, written only when non-empty
};

ReportFiles report_files(const std::filesystem::path& report_path);

// Timing is omitted when `include_timing` is false so the document depends
// only on the configuration.
nlohmann::json report_json(const RunReport& report, const ReportFiles& files, bool include_timing);

// Writes the JSON report, the recommended-z sidecar and the evaluator log.
ReportFiles write_report(const RunReport& report, const std::filesystem::path& report_path, bool include_timing);

// Sidecar format: uint64 element count, then the doubles, all little-endian.
void write_z_file(const std::filesystem::path& path, std::span<const double> z);
std::vector<double> read_z_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace noisejector::harness
