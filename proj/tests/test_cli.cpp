#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("noisejector_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs the CLI through the shell; `env` is prepended verbatim.
Outcome cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / "noisejector_test_cli_io";
    fs::create_directories(dir);
    const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = dir / ("err" + std::to_string(counter++) + ".txt");
    const std::string command =
        env + " '" + NOISEJECTOR_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(command.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
}

std::string echo(const std::string& flags = "") {
    return std::string("\"exec:") + NOISEJECTOR_ECHO + (flags.empty() ? "" : " " + flags) + "\"";
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("run").code == 2);
    CHECK(cli("run --evaluator builtin:separable-quadratic --budget 0").code == 2);
    CHECK(cli("run --evaluator builtin:separable-quadratic --optimizer nelder-mead").code == 2);
    CHECK(cli("run --evaluator builtin:separable-quadratic --weights 1,2").code == 2);
    CHECK(cli("run --evaluator builtin:separable-quadratic --pessimistic maybe").code == 2);
    CHECK(cli("run --evaluator builtin:separable-quadratic --hyperparam sigma0").code == 2);
    CHECK(cli("run --evaluator nothing:here").code == 2);
    CHECK(cli("bench --suite banana").code == 2);
    CHECK(cli("bench --reps 0").code == 2);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("run writes a report and prints a summary") {
    const auto dir = scratch("run");
    const auto o = cli("run --evaluator builtin:separable-quadratic:dim=4 --optimizer cma --budget 300 --seed 2 --out '" +
                       (dir / "r.json").string() + "'");
    CHECK(o.code == 0);
    CHECK(o.out.find("criterion") != std::string::npos);
    CHECK(o.out.find("[info]") == std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(doc["spec"]["optimizer"] == "cma");
    CHECK(doc["trace"].size() == 300);
    CHECK(fs::file_size(dir / "r.z.bin") == 8 + 8 * 4);
}

TEST_CASE("evaluator failures map to distinct exit codes") {
    CHECK(cli("run --evaluator 'exec:/nonexistent/evaluator' --budget 10").code == 3);
    CHECK(cli("run --evaluator " + echo("--wrong-id") + " --budget 10").code == 4);
    CHECK(cli("run --evaluator " + echo("--exit-after 3") + " --budget 50").code == 4);
    const auto hang = cli("run --evaluator " + echo("--hang") + " --budget 10 --eval-timeout 0.3");
    CHECK(hang.code == 5);
    CHECK(hang.err.find("timeout") != std::string::npos);
}

TEST_CASE("exec evaluator run writes the evaluator log") {
    const auto dir = scratch("exec");
    const auto o = cli("run --evaluator " + echo("--chatter") + " --budget 40 --optimizer oneplusone --out '" +
                       (dir / "r.json").string() + "'");
    CHECK(o.code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(doc["evaluator_log"] == "r.stderr.log");
    CHECK(slurp(dir / "r.stderr.log").find("request") != std::string::npos);
}

TEST_CASE("bench exits 6 when a cell fails") {
    const auto dir = scratch("bench");
    const auto ok = cli("bench --suite rotated --optimizers dcma,cma --criteria c1,c2 --reps 2 --budget 200 --dim 3 "
                        "--master-seed 4 --csv --out-dir '" + dir.string() + "'");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("dcma") != std::string::npos);
    CHECK(fs::exists(dir / "bench.json"));
    CHECK(fs::exists(dir / "bench.csv"));

    const auto failed = cli("bench --optimizers de,random --reps 1 --budget 20 --dim 3");
    CHECK(failed.code == 6);
}

TEST_CASE("ablate writes the grid") {
    const auto dir = scratch("ablate");
    const auto o = cli("ablate --evaluator builtin:plateau-artifact:dim=4 --budget 200 --out-dir '" + dir.string() + "'");
    CHECK(o.code == 0);
    CHECK(fs::exists(dir / "ablate.json"));
    CHECK(fs::exists(dir / "full_pessimistic.json"));
    CHECK(fs::exists(dir / "no_realism_no_penalty_raw.json"));
}

TEST_CASE("protocol-check exit status") {
    const auto ok = cli("protocol-check --evaluator " + echo("--gradient"));
    CHECK(ok.code == 0);
    CHECK(ok.out.find("protocol-check passed") != std::string::npos);
    const auto bad = cli("protocol-check --timeout 1 --evaluator " + echo("--wrong-id"));
    CHECK(bad.code == 4);
    CHECK(bad.out.find("FAIL") != std::string::npos);
    CHECK(cli("protocol-check --evaluator builtin:separable-quadratic").code == 2);
}

TEST_CASE("NOISEJECTOR_LOG sets verbosity on stderr") {
    const auto dir = scratch("log");
    const std::string args = "run --evaluator " + echo() + " --budget 20 --out '" + (dir / "r.json").string() + "'";
    const auto normal = cli(args);
    CHECK(normal.code == 0);
    CHECK(normal.err.find("[info]") != std::string::npos);

    const auto quiet = cli(args, "NOISEJECTOR_LOG=error");
    CHECK(quiet.code == 0);
    CHECK(quiet.err.empty());

    const auto verbose = cli(args, "NOISEJECTOR_LOG=debug");
    CHECK(verbose.code == 0);
    CHECK(verbose.err.size() >= normal.err.size());
}
