#include "noisejector/harness/ablate.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"

namespace noisejector::harness {

namespace {

using Json = nlohmann::json;

double z_sq_over_d(const NoiseVector& z) {
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return sq / static_cast<double>(z.size());
}

std::string cell_label(const AblationCell& cell) {
    return fmt::format("{}/{}", cell.name, cell.pessimistic ? "pessimistic" : "raw");
}

std::string cell_stem(const AblationCell& cell) {
    return fmt::format("{}_{}", cell.name, cell.pessimistic ? "pessimistic" : "raw");
}

}  // namespace

std::vector<AblationCell> ablation_grid() {
    const std::vector<AblationCell> weights{
        {"no_realism_no_penalty", false, true, true, true},
        {"no_realism", false, true, false, true},
        {"no_penalty", false, false, true, true},
        {"no_quality", true, false, false, true},
        {"full", false, false, false, true},
    };
    std::vector<AblationCell> grid;
    for (bool pessimistic : {true, false}) {
        for (AblationCell cell : weights) {
            cell.pessimistic = pessimistic;
            grid.push_back(cell);
        }
    }
    return grid;
}

std::vector<AblationRun> ablate(const RunConfig& base, const std::filesystem::path& out_dir) {
    if (base.budget == 0) fail(ErrorCode::Usage, "budget must be positive");
    if (base.evaluator.empty()) fail(ErrorCode::Usage, "no evaluator given");
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    std::vector<AblationRun> runs;
    for (const auto& cell : ablation_grid()) {
        RunConfig cfg = base;
        if (cell.zero_quality) cfg.criterion.lambda_q = 0.0;
        if (cell.zero_realism) cfg.criterion.lambda_r = 0.0;
        if (cell.zero_penalty) cfg.criterion.lambda_p = 0.0;
        cfg.criterion.pessimistic = cell.pessimistic;
        spdlog::info("ablation cell {}", cell_label(cell));
        runs.push_back({cell, run(cfg)});
        if (!out_dir.empty()) write_report(runs.back().report, out_dir / (cell_stem(cell) + ".json"), false);
    }
    if (!out_dir.empty()) write_text_file(out_dir / "ablate.json", ablate_json(base, runs).dump(2) + "\n");
    return runs;
}

Json ablate_json(const RunConfig& base, const std::vector<AblationRun>& runs) {
    Json cells = Json::array();
    for (const auto& r : runs) {
        const auto& crit = r.report.config.criterion;
        cells.push_back({
            {"cell", r.cell.name},
            {"pessimistic", r.cell.pessimistic},
            {"weights", {crit.lambda_q, crit.lambda_r, crit.lambda_p}},
            {"report", cell_stem(r.cell) + ".json"},
            {"value", r.report.final.value},
            {"quality_score", r.report.final.quality_score},
            {"realism_score", r.report.final.realism_score},
            {"z_sq_over_d", z_sq_over_d(r.report.recommended)},
            {"raw_min_patch", r.report.final_raw.min_patch()},
        });
    }
    Json doc;
    doc["schema"] = kAblateReportSchema;
    doc["schema_version"] = kReportSchemaVersion;
    doc["base"] = {
        {"evaluator", base.evaluator},
        {"optimizer", to_string(base.optimizer)},
        {"criterion", to_string(base.criterion.variant)},
        {"budget", base.budget},
        {"seed", base.seed},
        {"weights", {base.criterion.lambda_q, base.criterion.lambda_r, base.criterion.lambda_p}},
    };
    doc["cells"] = std::move(cells);
    return doc;
}

std::string ablate_table(const std::vector<AblationRun>& runs) {
    std::string out = fmt::format("{:<36}{:>12}{:>12}{:>12}{:>12}\n", "cell", "value", "S_q", "S_r", "|z|^2/d");
    for (const auto& r : runs)
        out += fmt::format("{:<36}{:>12.4f}{:>12.4f}{:>12.4f}{:>12.4f}\n", cell_label(r.cell), r.report.final.value,
                           r.report.final.quality_score, r.report.final.realism_score,
                           z_sq_over_d(r.report.recommended));
    return out;
}

}  // namespace noisejector::harness
