#include "noisejector/harness/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"
#include "noisejector/harness/run.hpp"

namespace noisejector::harness {

namespace {

using Json = nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Json optional_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string run_stem(const CellResult& cell, std::size_t rep) {
    return fmt::format("{}_{}_rep{}", to_string(cell.optimizer), to_string(cell.criterion), rep);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::string_view> parts, std::uint64_t index) {
    std::uint64_t h = splitmix64(master);
    for (std::string_view part : parts) h = splitmix64(h ^ fnv1a(part));
    return splitmix64(h ^ splitmix64(index));
}

std::string_view to_string(Suite suite) noexcept {
    switch (suite) {
        case Suite::Separable: return "separable";
        case Suite::Rotated: return "rotated";
        case Suite::Plateau: return "plateau";
    }
    return "unknown";
}

Suite parse_suite(std::string_view text) {
    for (Suite s : {Suite::Separable, Suite::Rotated, Suite::Plateau})
        if (to_string(s) == text) return s;
    fail(ErrorCode::Usage, fmt::format("unknown suite '{}', expected separable|rotated|plateau", text));
}

std::size_t default_suite_dimension(Suite suite) noexcept { return suite == Suite::Separable ? 50 : 10; }

std::string suite_evaluator(Suite suite, std::size_t dimension, std::uint64_t problem_seed) {
    std::string_view name = "separable-quadratic";
    if (suite == Suite::Rotated) name = "rotated-quadratic";
    if (suite == Suite::Plateau) name = "plateau-artifact";
    return fmt::format("builtin:{}:dim={},seed={}", name, dimension, problem_seed);
}

std::vector<double> CellResult::finished() const {
    std::vector<double> out;
    for (const auto& v : values)
        if (v) out.push_back(*v);
    return out;
}

double CellResult::mean() const {
    const auto v = finished();
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double CellResult::stddev() const {
    const auto v = finished();
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (v.size() == 1) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double CellResult::median() const {
    auto v = finished();
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const CellResult& BenchResult::cell(optim::OptimizerKind optimizer, CriterionVariant criterion) const {
    for (const auto& c : cells)
        if (c.optimizer == optimizer && c.criterion == criterion) return c;
    fail(ErrorCode::Usage, fmt::format("no bench cell {}/{}", to_string(optimizer), to_string(criterion)));
}

std::size_t BenchResult::failed_cells() const noexcept {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.failed(); }));
}

BenchResult bench(const BenchConfig& config) {
    if (config.reps == 0) fail(ErrorCode::Usage, "bench needs at least one repetition");
    if (config.optimizers.empty() || config.criteria.empty())
        fail(ErrorCode::Usage, "bench needs at least one optimizer and one criterion");
    if (config.budget == 0) fail(ErrorCode::Usage, "budget must be positive");

    BenchResult result;
    result.config = config;
    result.dimension = config.dimension.value_or(default_suite_dimension(config.suite));
    if (result.dimension == 0) fail(ErrorCode::Usage, "dimension must be positive");

    for (auto opt : config.optimizers) {
        for (auto crit : config.criteria) {
            CellResult cell;
            cell.optimizer = opt;
            cell.criterion = crit;
            cell.values.assign(config.reps, std::nullopt);
            cell.wall_seconds.assign(config.reps, 0.0);
            for (std::size_t rep = 0; rep < config.reps; ++rep)
                cell.seeds.push_back(derive_seed(config.master_seed, {to_string(opt), to_string(crit)}, rep));
            result.cells.push_back(std::move(cell));
        }
    }

    const bool write_files = !config.out_dir.empty();
    if (write_files) std::filesystem::create_directories(config.out_dir / "runs");

    std::vector<std::string> problems;
    for (std::size_t rep = 0; rep < config.reps; ++rep)
        problems.push_back(suite_evaluator(
            config.suite, result.dimension, derive_seed(config.master_seed, {"problem", to_string(config.suite)}, rep)));

    const std::size_t tasks = result.cells.size() * config.reps;
    std::vector<std::string> task_errors(tasks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
            CellResult& cell = result.cells[t / config.reps];
            const std::size_t rep = t % config.reps;
            RunConfig rc;
            rc.evaluator = problems[rep];
            rc.optimizer = cell.optimizer;
            rc.criterion = {config.lambda_q, config.lambda_r, config.lambda_p, cell.criterion, config.pessimistic};
            rc.budget = config.budget;
            rc.seed = cell.seeds[rep];
            try {
                const RunReport report = run(rc);
                cell.values[rep] = report.final.value;
                cell.wall_seconds[rep] = report.wall_seconds;
                if (write_files)
                    write_report(report, config.out_dir / "runs" / (run_stem(cell, rep) + ".json"), false);
            } catch (const std::exception& e) {
                task_errors[t] = fmt::format("rep {}: {}", rep, e.what());
                spdlog::error("bench cell {}/{} {}", to_string(cell.optimizer), to_string(cell.criterion),
                              task_errors[t]);
            }
        }
    };

    std::size_t width = config.workers != 0 ? config.workers : std::max(1U, std::thread::hardware_concurrency());
    width = std::min(width, tasks);
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < width; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    for (std::size_t t = 0; t < tasks; ++t)
        if (!task_errors[t].empty()) result.cells[t / config.reps].errors.push_back(task_errors[t]);

    if (write_files) {
        write_text_file(config.out_dir / "bench.json", bench_json(result).dump(2) + "\n");
        if (config.csv) write_text_file(config.out_dir / "bench.csv", bench_csv(result));
        Json timing;
        timing["total_wall_time_s"] = total;
        timing["workers"] = width;
        Json runs = Json::array();
        for (const auto& cell : result.cells)
            for (std::size_t rep = 0; rep < config.reps; ++rep)
                runs.push_back({{"run", run_stem(cell, rep)}, {"wall_time_s", cell.wall_seconds[rep]}});
        timing["runs"] = std::move(runs);
        write_text_file(config.out_dir / "timing.json", timing.dump(2) + "\n");
    }
    return result;
}

Json bench_json(const BenchResult& result) {
    const auto& cfg = result.config;
    Json rows = Json::array(), columns = Json::array();
    for (auto opt : cfg.optimizers) rows.push_back(to_string(opt));
    for (auto crit : cfg.criteria) columns.push_back(to_string(crit));

    Json cells = Json::array();
    for (const auto& cell : result.cells) {
        Json values = Json::array(), runs = Json::array();
        for (std::size_t rep = 0; rep < cell.values.size(); ++rep) {
            values.push_back(cell.values[rep] ? Json(*cell.values[rep]) : Json(nullptr));
            runs.push_back(cell.values[rep] ? Json("runs/" + run_stem(cell, rep) + ".json") : Json(nullptr));
        }
        cells.push_back({
            {"optimizer", to_string(cell.optimizer)},
            {"criterion", to_string(cell.criterion)},
            {"seeds", cell.seeds},
            {"values", std::move(values)},
            {"mean", optional_number(cell.mean())},
            {"std", optional_number(cell.stddev())},
            {"median", optional_number(cell.median())},
            {"failed", cell.failed()},
            {"errors", cell.errors},
            {"runs", std::move(runs)},
        });
    }

    Json doc;
    doc["schema"] = kBenchReportSchema;
    doc["schema_version"] = kReportSchemaVersion;
    doc["config"] = {
        {"suite", to_string(cfg.suite)},
        {"dimension", result.dimension},
        {"budget", cfg.budget},
        {"reps", cfg.reps},
        {"master_seed", cfg.master_seed},
        {"pessimistic", cfg.pessimistic},
        {"weights", {cfg.lambda_q, cfg.lambda_r, cfg.lambda_p}},
    };
    doc["rows"] = std::move(rows);
    doc["columns"] = std::move(columns);
    doc["cells"] = std::move(cells);
    doc["failed_cells"] = result.failed_cells();
    return doc;
}

std::string bench_csv(const BenchResult& result) {
    std::string out = "optimizer,criterion,reps,finished,mean,std,median,failed\n";
    auto num = [](double v) { return std::isfinite(v) ? fmt::format("{}", v) : std::string(); };
    for (const auto& cell : result.cells)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(cell.optimizer), to_string(cell.criterion),
                           cell.values.size(), cell.finished().size(), num(cell.mean()), num(cell.stddev()),
                           num(cell.median()), cell.failed() ? 1 : 0);
    return out;
}

std::string bench_table(const BenchResult& result) {
    const auto& cfg = result.config;
    std::string out = fmt::format("suite {}  d={}  budget {}  reps {}  master seed {}\n", to_string(cfg.suite),
                                  result.dimension, cfg.budget, cfg.reps, cfg.master_seed);
    constexpr int kFirst = 12;
    constexpr int kCol = 22;
    out += fmt::format("{:<{}}", "optimizer", kFirst);
    for (auto crit : cfg.criteria) out += fmt::format("{:>{}}", to_string(crit), kCol);
    out += "\n";
    for (auto opt : cfg.optimizers) {
        out += fmt::format("{:<{}}", to_string(opt), kFirst);
        for (auto crit : cfg.criteria) {
            const auto& cell = result.cell(opt, crit);
            std::string text = cell.finished().empty()
                                   ? std::string("failed")
                                   : fmt::format("{:.4f} +/- {:.4f}{}", cell.mean(), cell.stddev(),
                                                 cell.failed() ? "*" : "");
            out += fmt::format("{:>{}}", text, kCol);
        }
        out += "\n";
    }
    if (result.failed_cells() != 0) out += "* cell has failed repetitions\n";
    return out;
}

}  // namespace noisejector::harness
