#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include <doctest.h>

#include "noisejector/error.hpp"
#include "noisejector/optim/cma.hpp"
#include "noisejector/optim/optimizer.hpp"
#include "noisejector/optim/simple.hpp"

using namespace noisejector;
using namespace noisejector::optim;

namespace {

using Fitness = std::function<double(const NoiseVector&)>;

OptimizerSpec spec_of(OptimizerKind kind, std::size_t d, std::size_t budget, std::uint64_t seed = 1,
                      Hyperparams hp = {}) {
    OptimizerSpec s;
    s.kind = kind;
    s.dimension = d;
    s.budget = budget;
    s.seed = seed;
    s.hyperparams = std::move(hp);
    return s;
}

std::vector<Evaluated> score(const std::vector<NoiseVector>& batch, const Fitness& f) {
    std::vector<Evaluated> out;
    for (const auto& z : batch) out.push_back({z, f(z)});
    return out;
}

// Runs to exhaustion; returns the number of evaluations charged.
std::size_t drive(Optimizer& opt, const Fitness& f) {
    std::size_t count = 0;
    while (!opt.exhausted()) {
        const auto batch = opt.ask();
        count += batch.size();
        opt.tell(score(batch, f));
    }
    return count;
}

double sphere_to_ones(const NoiseVector& z) {
    double s = 0.0;
    for (double v : z) s += (v - 1.0) * (v - 1.0);
    return -s;
}

}  // namespace

TEST_CASE("cma strategy parameters for n = 10") {
    const auto p = cma_parameters(10, default_cma_population(10), false);
    CHECK(p.lambda == 10);
    CHECK(p.mu == 5);

    // weights recomputed from their definition
    std::vector<double> w(5);
    for (int i = 0; i < 5; ++i) w[i] = std::log(5.5) - std::log(i + 1.0);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    double sq = 0.0;
    for (double& v : w) {
        v /= sum;
        sq += v * v;
    }
    for (int i = 0; i < 5; ++i) CHECK(p.weights[i] == doctest::Approx(w[i]).epsilon(1e-14));
    const double mueff = 1.0 / sq;
    CHECK(p.mueff == doctest::Approx(mueff).epsilon(1e-14));
    CHECK(p.cs == doctest::Approx((mueff + 2.0) / (10.0 + mueff + 5.0)).epsilon(1e-14));
    CHECK(p.c1 == doctest::Approx(2.0 / (11.3 * 11.3 + mueff)).epsilon(1e-14));

    const auto sep = cma_parameters(10, 10, true);
    CHECK(sep.c1 == doctest::Approx(p.c1 * 12.0 / 3.0).epsilon(1e-14));
    CHECK(sep.cmu == doctest::Approx(p.cmu * 12.0 / 3.0).epsilon(1e-14));

    CHECK(default_cma_population(50) == 15);
    CHECK(default_cma_population(1) == 4);
}

TEST_CASE("same seed gives the same first batch for every optimizer") {
    for (OptimizerKind kind : all_optimizer_kinds()) {
        CAPTURE(to_string(kind));
        auto a = make_optimizer(spec_of(kind, 6, 500, 99));
        auto b = make_optimizer(spec_of(kind, 6, 500, 99));
        CHECK(a->ask() == b->ask());
    }
}

TEST_CASE("same seed and fitness give a bit-identical recommendation") {
    for (OptimizerKind kind : all_optimizer_kinds()) {
        CAPTURE(to_string(kind));
        auto a = make_optimizer(spec_of(kind, 5, 700, 3));
        auto b = make_optimizer(spec_of(kind, 5, 700, 3));
        drive(*a, sphere_to_ones);
        drive(*b, sphere_to_ones);
        CHECK(a->recommend() == b->recommend());
        CHECK(a->best()->value == b->best()->value);
    }
}

TEST_CASE("evaluations charged equal the budget exactly") {
    for (OptimizerKind kind : all_optimizer_kinds()) {
        for (std::size_t budget : {37u, 1003u}) {
            CAPTURE(to_string(kind));
            CAPTURE(budget);
            auto opt = make_optimizer(spec_of(kind, 7, budget, 5));
            CHECK(drive(*opt, sphere_to_ones) == budget);
            CHECK(opt->evaluations_used() == budget);
            CHECK_THROWS_AS(opt->ask(), Error);
        }
    }
}

TEST_CASE("budget smaller than one population is a usage error") {
    try {
        make_optimizer(spec_of(OptimizerKind::DE, 4, 10));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Usage);
    }
    CHECK_THROWS_AS(make_optimizer(spec_of(OptimizerKind::DCMA, 10, 9)), Error);
}

TEST_CASE("unknown hyperparameters are rejected") {
    try {
        make_optimizer(spec_of(OptimizerKind::CMA, 3, 100, 1, {{"sigma", 1.0}}));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Usage);
    }
    CHECK_THROWS_AS(make_optimizer(spec_of(OptimizerKind::DE, 3, 100, 1, {{"CR", 1.5}})), Error);
}

TEST_CASE("tell contracts") {
    auto opt = make_optimizer(spec_of(OptimizerKind::DCMA, 4, 100));
    CHECK_THROWS_AS(opt->recommend(), Error);

    auto batch = opt->ask();
    CHECK_THROWS_AS(opt->ask(), Error);

    auto pairs = score(batch, sphere_to_ones);
    auto with_nan = pairs;
    with_nan[2].value = std::numeric_limits<double>::quiet_NaN();
    try {
        opt->tell(with_nan);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteValue);
    }

    auto stranger = pairs;
    stranger[0].z[0] += 1e-9;
    try {
        opt->tell(stranger);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownCandidate);
    }

    auto duplicated = pairs;
    duplicated[1] = duplicated[0];
    CHECK_THROWS_AS(opt->tell(duplicated), Error);

    auto short_batch = pairs;
    short_batch.pop_back();
    CHECK_THROWS_AS(opt->tell(short_batch), Error);

    opt->tell(pairs);
    CHECK(opt->evaluations_used() == batch.size());
    CHECK_THROWS_AS(opt->tell(pairs), Error);
}

TEST_CASE("tell order does not change the state") {
    auto a = make_optimizer(spec_of(OptimizerKind::CMA, 5, 200, 12));
    auto b = make_optimizer(spec_of(OptimizerKind::CMA, 5, 200, 12));
    for (int gen = 0; gen < 5; ++gen) {
        auto pa = score(a->ask(), sphere_to_ones);
        auto pb = score(b->ask(), sphere_to_ones);
        std::reverse(pb.begin(), pb.end());
        a->tell(pa);
        b->tell(pb);
    }
    CHECK(a->ask() == b->ask());
}

TEST_CASE("best seen is monotone and is the recommendation") {
    for (OptimizerKind kind : all_optimizer_kinds()) {
        CAPTURE(to_string(kind));
        auto opt = make_optimizer(spec_of(kind, 4, 600, 8));
        double previous = -std::numeric_limits<double>::infinity();
        double max_seen = previous;
        while (!opt->exhausted()) {
            const auto pairs = score(opt->ask(), sphere_to_ones);
            for (const auto& p : pairs) max_seen = std::max(max_seen, p.value);
            opt->tell(pairs);
            CHECK(opt->best()->value >= previous);
            previous = opt->best()->value;
        }
        CHECK(opt->best()->value == max_seen);
        CHECK(sphere_to_ones(opt->recommend()) == max_seen);
    }
}

TEST_CASE("recommendation ties keep the earliest candidate") {
    auto opt = make_optimizer(spec_of(OptimizerKind::RandomSearch, 3, 10, 4, {{"batch", 5}}));
    const auto batch = opt->ask();
    opt->tell(score(batch, [](const NoiseVector&) { return 1.0; }));
    CHECK(opt->recommend() == batch[0]);
    CHECK(opt->best()->evaluation == 0);
}

TEST_CASE("random search with budget 1 recommends its only sample") {
    auto opt = make_optimizer(spec_of(OptimizerKind::RandomSearch, 4, 1, 8));
    const auto batch = opt->ask();
    REQUIRE(batch.size() == 1);
    opt->tell(score(batch, sphere_to_ones));
    CHECK(opt->exhausted());
    CHECK(opt->recommend() == batch[0]);
}

TEST_CASE("tiny sigma collapses samples onto the mean") {
    auto opt = make_optimizer(spec_of(OptimizerKind::DCMA, 6, 100, 2, {{"sigma0", 1e-12}}));
    for (const auto& z : opt->ask())
        for (double v : z) CHECK(std::abs(v) <= 1e-10);

    auto full = make_optimizer(spec_of(OptimizerKind::CMA, 6, 100, 2, {{"sigma0", 1e-12}}));
    for (const auto& z : full->ask())
        for (double v : z) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("flat fitness keeps the mean and inflates sigma") {
    OptimizerSpec s = spec_of(OptimizerKind::DCMA, 10, 100000, 6);
    DiagonalCma opt(s);
    const auto flat = [](const NoiseVector&) { return 3.0; };
    const double factor = std::exp(0.2 + opt.parameters().cs / opt.parameters().ds);
    double sigma = opt.sigma();
    for (int gen = 0; gen < 5; ++gen) {
        opt.tell(score(opt.ask(), flat));
        for (double m : opt.mean()) CHECK(m == 0.0);
        CHECK(opt.sigma() == doctest::Approx(sigma * factor).epsilon(1e-12));
        sigma = opt.sigma();
    }

    // sigma eventually hits the upper clamp and stays finite
    while (opt.diagnostics().clamp_events == 0 && !opt.exhausted()) opt.tell(score(opt.ask(), flat));
    CHECK(opt.diagnostics().clamp_events > 0);
    CHECK(opt.sigma() <= kMaxScale);
    for (double c : opt.covariance_diagonal()) CHECK((c >= kMinScale && c <= kMaxScale));
    for (const auto& z : opt.ask())
        for (double v : z) CHECK(std::isfinite(v));
}

TEST_CASE("(1+1) starts at zero and adapts sigma by the one-fifth rule") {
    OnePlusOne opt(spec_of(OptimizerKind::OnePlusOne, 4, 100, 10));
    const auto first = opt.ask();
    REQUIRE(first.size() == 1);
    CHECK(first[0] == NoiseVector(4));
    opt.tell(score(first, [](const NoiseVector&) { return 0.0; }));

    const double s0 = opt.sigma();
    const auto better = opt.ask();
    REQUIRE(better.size() == 1);
    opt.tell(score(better, [](const NoiseVector&) { return 1.0; }));
    CHECK(opt.incumbent() == better[0]);
    CHECK(opt.sigma() == doctest::Approx(s0 * std::exp(1.0 / 3.0)).epsilon(1e-15));

    const auto worse = opt.ask();
    opt.tell(score(worse, [](const NoiseVector&) { return 0.5; }));
    CHECK(opt.incumbent() == better[0]);
    CHECK(opt.sigma() == doctest::Approx(s0 * std::exp(1.0 / 3.0 - 1.0 / 12.0)).epsilon(1e-15));
}

TEST_CASE("DE trials differ from their parents") {
    DifferentialEvolution opt(spec_of(OptimizerKind::DE, 8, 2000, 14, {{"popsize", 20}}));
    const auto initial = opt.ask();
    CHECK(initial.size() == 20);
    opt.tell(score(initial, sphere_to_ones));
    for (int gen = 0; gen < 4; ++gen) {
        const auto trials = opt.ask();
        REQUIRE(trials.size() == opt.trial_parents().size());
        for (std::size_t k = 0; k < trials.size(); ++k) {
            const auto& parent = opt.population()[opt.trial_parents()[k]];
            std::size_t changed = 0;
            for (std::size_t i = 0; i < 8; ++i) changed += trials[k][i] != parent[i];
            CHECK(changed >= 1);
        }
        opt.tell(score(trials, sphere_to_ones));
    }
}

TEST_CASE("DE replacement is greedy") {
    DifferentialEvolution opt(spec_of(OptimizerKind::DE, 3, 2000, 15));
    opt.tell(score(opt.ask(), sphere_to_ones));
    for (int gen = 0; gen < 10; ++gen) {
        const auto before = opt.population();
        const auto trials = opt.ask();
        const auto parents = opt.trial_parents();
        opt.tell(score(trials, sphere_to_ones));
        for (std::size_t k = 0; k < trials.size(); ++k) {
            const auto& now = opt.population()[parents[k]];
            const double expected = std::max(sphere_to_ones(before[parents[k]]), sphere_to_ones(trials[k]));
            CHECK(sphere_to_ones(now) == expected);
        }
    }
}

TEST_CASE("random search draws standard normals") {
    auto opt = make_optimizer(spec_of(OptimizerKind::RandomSearch, 3, 10000, 21));
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    std::size_t n = 0;
    while (!opt->exhausted()) {
        const auto batch = opt->ask();
        CHECK(batch.size() == 1);
        for (const auto& z : batch) {
            for (std::size_t i = 0; i < 3; ++i) {
                sum[i] += z[i];
                sq[i] += z[i] * z[i];
            }
            ++n;
        }
        opt->tell(score(batch, sphere_to_ones));
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const double mean = sum[i] / n;
        const double var = sq[i] / n - mean * mean;
        CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
        CHECK(std::abs(var - 1.0) < 0.05);
    }
}

TEST_CASE("forward differences") {
    const NoiseVector z(std::vector<double>{0.5, -1.0, 2.0});
    const auto probes = forward_difference_probes(z, 1e-3);
    REQUIRE(probes.size() == 4);
    CHECK(probes[0] == z);
    CHECK(probes[2][1] == -1.0 + 1e-3);

    const std::vector<double> c{3.0, -2.0, 0.5};
    const auto linear = [&](const NoiseVector& x) { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + 7.0; };
    const auto g = finite_difference_gradient(linear, z, 1e-3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(c[i]).epsilon(1e-9));

    // |z|^2 at the origin: (eps^2 - 0) / eps = eps
    const auto norm2 = [](const NoiseVector& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    for (double v : finite_difference_gradient(norm2, NoiseVector(3), 1e-3)) CHECK(v == doctest::Approx(1e-3));

    const auto nan = [](const NoiseVector&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(finite_difference_gradient(nan, z, 1e-3), Error);
}

TEST_CASE("gradient ascent steps along the forward-difference gradient") {
    GradientAscent gd(spec_of(OptimizerKind::GD, 2, 300, 1));
    const auto probes = gd.ask();
    REQUIRE(probes.size() == 3);
    const auto linear = [](const NoiseVector& x) { return 2.0 * x[0] - x[1]; };
    gd.tell(score(probes, linear));
    CHECK(gd.iterate()[0] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(gd.iterate()[1] == doctest::Approx(-0.1).epsilon(1e-9));
}

TEST_CASE("gradient mode follows ask, tell, tell_gradient") {
    auto spec = spec_of(OptimizerKind::Adam, 3, 50, 1);
    spec.evaluator_gradient = true;
    GradientAscent adam(spec);
    const auto batch = adam.ask();
    REQUIRE(batch.size() == 1);
    CHECK_THROWS_AS(adam.tell_gradient(std::vector<double>{1.0, 1.0, 1.0}), Error);
    adam.tell(score(batch, sphere_to_ones));
    CHECK(adam.wants_gradient());
    CHECK_THROWS_AS(adam.ask(), Error);
    CHECK_THROWS_AS(adam.tell_gradient(std::vector<double>{1.0}), Error);
    adam.tell_gradient(std::vector<double>{4.0, -0.5, 0.0});
    CHECK_FALSE(adam.wants_gradient());
    // the first bias-corrected Adam step has magnitude lr per coordinate
    CHECK(adam.iterate()[0] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(adam.iterate()[1] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(adam.iterate()[2] == 0.0);

    auto cma = make_optimizer(spec_of(OptimizerKind::CMA, 3, 50));
    try {
        cma->tell_gradient(std::vector<double>{1.0, 1.0, 1.0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Unsupported);
    }
}

TEST_CASE("DCMA converges on a shifted sphere") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto opt = make_optimizer(spec_of(OptimizerKind::DCMA, 10, 2000, seed));
        drive(*opt, sphere_to_ones);
        CHECK(-opt->best()->value < 1e-2);
    }
}

TEST_CASE("full CMA solves a rotated ill-conditioned quadratic") {
    const std::size_t d = 10;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = n(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    Eigen::VectorXd scales(d);
    for (std::size_t i = 0; i < d; ++i) scales(i) = std::pow(10.0, static_cast<double>(i) / (d - 1));
    const Eigen::MatrixXd h = q * scales.asDiagonal() * q.transpose();
    Eigen::VectorXd target(d);
    for (std::size_t i = 0; i < d; ++i) target(i) = 0.5 * n(rng);

    const auto f = [&](const NoiseVector& z) {
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(z.data(), d) - target;
        return -x.dot(h * x);
    };
    auto opt = make_optimizer(spec_of(OptimizerKind::CMA, d, 5000, 4));
    drive(*opt, f);
    CHECK(-opt->best()->value < 1e-4);
}
