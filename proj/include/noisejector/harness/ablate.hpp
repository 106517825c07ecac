#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisejector/harness/run.hpp"

namespace noisejector::harness {

inline constexpr const char* kAblateReportSchema = "noisejector.ablate_report";

// One weight setting of the grid; zeroed terms override the base weights.
struct AblationCell {
    std::string name;
    bool zero_quality = false;
    bool zero_realism = false;
    bool zero_penalty = false;
    bool pessimistic = true;
};

// {lr=lp=0, lr=0, lp=0, lq=0, full} x {pessimistic, raw}.
std::vector<AblationCell> ablation_grid();

struct AblationRun {
    AblationCell cell;
    RunReport report;
};

// Every cell shares the base seed and evaluator, so "full/pessimistic" is the
// plain run of the base config. With an out_dir, writes one report per cell
// plus ablate.json.
std::vector<AblationRun> ablate(const RunConfig& base, const std::filesystem::path& out_dir = {});

nlohmann::json ablate_json(const RunConfig& base, const std::vector<AblationRun>& runs);
std::string ablate_table(const std::vector<AblationRun>& runs);

}  // namespace noisejector::harness
