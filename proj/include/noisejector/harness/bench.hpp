#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "noisejector/criterion/types.hpp"
#include "noisejector/optim/optimizer.hpp"

namespace noisejector::harness {

inline constexpr const char* kBenchReportSchema = "noisejector.bench_report";

// Mixes the master seed with named coordinates (row, column, ...) and an
// index, so adding a row or column never changes another cell's seeds.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::string_view> parts, std::uint64_t index);

enum class Suite { Separable, Rotated, Plateau };

std::string_view to_string(Suite suite) noexcept;
Suite parse_suite(std::string_view text);
std::size_t default_suite_dimension(Suite suite) noexcept;

// Built-in evaluator locator for one repetition of a suite.
std::string suite_evaluator(Suite suite, std::size_t dimension, std::uint64_t problem_seed);

struct BenchConfig {
    Suite suite = Suite::Separable;
    std::vector<optim::OptimizerKind> optimizers = optim::all_optimizer_kinds();
    std::vector<CriterionVariant> criteria{CriterionVariant::C1};
    std::size_t reps = 5;
    std::uint64_t master_seed = 0;
    std::size_t budget = 10'000;
    std::optional<std::size_t> dimension;  // suite default when unset
    bool pessimistic = true;
    double lambda_q = 1.0;
    double lambda_r = 1.0;
    double lambda_p = 1.0;
    std::size_t workers = 0;  // 0: hardware concurrency
    std::filesystem::path out_dir;  // empty: no files
    bool csv = false;
};

struct CellResult {
    optim::OptimizerKind optimizer = optim::OptimizerKind::DCMA;
    CriterionVariant criterion = CriterionVariant::C1;
    std::vector<std::optional<double>> values;  // per repetition; nullopt when the run failed
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> errors;
    std::vector<double> wall_seconds;

    bool failed() const noexcept { return !errors.empty(); }
    std::vector<double> finished() const;
    double mean() const;
    // Sample standard deviation; 0 for a single repetition.
    double stddev() const;
    double median() const;
};

struct BenchResult {
    BenchConfig config;
    std::size_t dimension = 0;
    std::vector<CellResult> cells;  // row-major: optimizers x criteria

    const CellResult& cell(optim::OptimizerKind optimizer, CriterionVariant criterion) const;
    std::size_t failed_cells() const noexcept;
};

// Runs every (optimizer, criterion, repetition) in a worker pool. Failed runs
// mark their cell and the bench continues. With an out_dir, writes
// bench.json, per-run reports under runs/, timing.json and optionally bench.csv.
BenchResult bench(const BenchConfig& config);

nlohmann::json bench_json(const BenchResult& result);
std::string bench_csv(const BenchResult& result);
// Aligned "mean ± std" table with optimizers as rows and criteria as columns.
std::string bench_table(const BenchResult& result);

}  // namespace noisejector::harness
