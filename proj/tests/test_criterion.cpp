#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "noisejector/criterion/criterion.hpp"
#include "noisejector/error.hpp"
#include "oracles.hpp"

using namespace noisejector;
using criterion::l_plus;

namespace {

RawEvaluation eval_of(double quality, std::vector<double> patches) { return {quality, std::move(patches)}; }

}  // namespace

TEST_CASE("l_plus examples") {
    CHECK(l_plus(0.0) == 0.0);
    CHECK(l_plus(-2.0) == -2.0);
    CHECK(l_plus(1.0) == doctest::Approx(0.693147180559945).epsilon(1e-14));
    CHECK(l_plus(std::exp(1.0) - 1.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("l_plus is continuous, increasing and below the identity") {
    CHECK(std::abs(l_plus(1e-9)) <= 2e-9);
    CHECK(std::abs(l_plus(-1e-9)) <= 2e-9);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 10000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (a < b) CHECK(l_plus(a) < l_plus(b));
        if (a <= 0.0) CHECK(l_plus(a) == a);
        if (b >= 0.0) CHECK(l_plus(b) <= b);
    }
}

TEST_CASE("l_plus derivative") {
    CHECK(criterion::l_plus_derivative(-3.0) == 1.0);
    CHECK(criterion::l_plus_derivative(0.0) == 1.0);
    CHECK(criterion::l_plus_derivative(1.0) == 0.5);
}

TEST_CASE("quality score examples") {
    const Baseline base{50.0, 0.0, 0.0};
    const CriterionConfig cfg;
    CHECK(criterion::quality_score(eval_of(55.0, {0.0}), base, cfg) == doctest::Approx(std::log(6.0)));
    CHECK(criterion::quality_score(eval_of(48.0, {0.0}), base, cfg) == -2.0);
    CHECK(criterion::quality_score(eval_of(50.0, {0.0}), base, cfg) == 0.0);

    CriterionConfig raw;
    raw.pessimistic = false;
    CHECK(criterion::quality_score(eval_of(55.0, {0.0}), base, raw) == 5.0);
}

TEST_CASE("realism score examples") {
    const CriterionConfig cfg;
    CHECK(criterion::realism_score(eval_of(0.0, {3.0, -1.0, 2.5}), Baseline{0.0, 0.0, 0.0}, cfg) == -1.0);
    CHECK(criterion::realism_score(eval_of(0.0, {2.0}), Baseline{0.0, 1.0, 0.0}, cfg) ==
          doctest::Approx(std::log(2.0)));
    CHECK(criterion::realism_score(eval_of(0.0, {0.7, 0.7}), Baseline{0.0, 0.7, 0.0}, cfg) == 0.0);

    const RawEvaluation empty{1.0, {}};
    CHECK_THROWS_AS(criterion::realism_score(empty, Baseline{}, cfg), Error);
}

TEST_CASE("criterion examples") {
    // scores chosen so S_q = 0.5 and S_r = 0.2 on the raw path
    const std::vector<double> z{1.0, 1.0, 1.0, 1.0};
    const auto e = eval_of(0.5, {0.2});
    CriterionConfig cfg;
    cfg.pessimistic = false;
    CHECK(criterion::criterion(z, e, Baseline{0.0, 0.0, 0.5}, cfg) == doctest::Approx(-0.3).epsilon(1e-15));
    cfg.variant = CriterionVariant::C2;
    CHECK(criterion::criterion(z, e, Baseline{0.0, 0.0, 0.5}, cfg) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("criterion vanishes at the baseline for any weights") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const Baseline base{u(rng), u(rng) - 2.5, u(rng)};
        const RawEvaluation at_zero{base.quality0, {base.realism0, base.realism0 + 1.0}};
        CriterionConfig cfg{u(rng), u(rng), u(rng), i % 2 ? CriterionVariant::C2 : CriterionVariant::C1, true};
        CHECK(criterion::criterion(std::vector<double>(7, 0.0), at_zero, base, cfg) == 0.0);
    }
}

TEST_CASE("criterion matches the oracle on random instances") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 300; ++i) {
        oracle::CriterionInput in;
        const std::size_t d = 1 + static_cast<std::size_t>(u(rng) * 20);
        for (std::size_t k = 0; k < d; ++k) in.z.push_back(n(rng));
        in.quality = 3.0 * n(rng);
        for (int p = 0; p < 4; ++p) in.patches.push_back(n(rng));
        in.quality0 = n(rng);
        in.realism0 = n(rng);
        in.blur = u(rng);
        in.lq = u(rng);
        in.lr = u(rng);
        in.lp = u(rng);
        in.c2 = i % 2 == 1;
        in.pessimistic = i % 3 != 0;

        const CriterionConfig cfg{in.lq, in.lr, in.lp, in.c2 ? CriterionVariant::C2 : CriterionVariant::C1,
                                  in.pessimistic};
        const double got = criterion::criterion(in.z, eval_of(in.quality, in.patches),
                                                Baseline{in.quality0, in.realism0, in.blur}, cfg);
        CHECK(std::abs(got - oracle::criterion(in)) <= 1e-12);
    }
}

TEST_CASE("C2 equals C1 bitwise when blur is 1") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> z(9);
        for (double& v : z) v = n(rng);
        const auto e = eval_of(n(rng), {n(rng), n(rng)});
        const Baseline base{n(rng), n(rng), 1.0};
        CriterionConfig c1{std::abs(n(rng)), std::abs(n(rng)), std::abs(n(rng)), CriterionVariant::C1, true};
        CriterionConfig c2 = c1;
        c2.variant = CriterionVariant::C2;
        CHECK(criterion::criterion(z, e, base, c1) == criterion::criterion(z, e, base, c2));
    }
}

TEST_CASE("criterion is non-increasing in |z| with scores fixed") {
    const auto e = eval_of(2.0, {1.0});
    const Baseline base{1.0, 0.0, 0.3};
    double previous = std::numeric_limits<double>::infinity();
    for (double r = 0.0; r <= 5.0; r += 0.25) {
        const double v = criterion::criterion(std::vector<double>{r, -r, 0.5 * r}, e, base, CriterionConfig{});
        CHECK(v <= previous);
        previous = v;
    }
}

TEST_CASE("realism score is dominated by every patch") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const RawEvaluation e{0.0, {n(rng), n(rng), n(rng), n(rng)}};
        const Baseline base{0.0, n(rng), 0.0};
        const double sr = criterion::realism_score(e, base, CriterionConfig{});
        for (double p : e.realism_patches) CHECK(sr <= l_plus(p - base.realism0));
    }
}

TEST_CASE("zeroed weights remove the corresponding input") {
    const std::vector<double> z{0.3, -0.2};
    const Baseline base{1.0, 0.5, 0.4};
    CriterionConfig no_q;
    no_q.lambda_q = 0.0;
    CHECK(criterion::criterion(z, eval_of(7.0, {1.0}), base, no_q) ==
          criterion::criterion(z, eval_of(-90.0, {1.0}), base, no_q));
    CriterionConfig no_r;
    no_r.lambda_r = 0.0;
    CHECK(criterion::criterion(z, eval_of(2.0, {4.0, 3.0}), base, no_r) ==
          criterion::criterion(z, eval_of(2.0, {-8.0}), base, no_r));
    CriterionConfig no_p;
    no_p.lambda_p = 0.0;
    CHECK(criterion::criterion(z, eval_of(2.0, {1.0}), base, no_p) ==
          criterion::criterion(std::vector<double>{30.0, 40.0}, eval_of(2.0, {1.0}), base, no_p));
}

TEST_CASE("criterion gradient matches central differences") {
    // quality = 3 + <c, z>, realism = 1 + <r, z>, so raw gradients are c and r
    const std::vector<double> c{0.5, -1.0, 0.25}, r{-0.3, 0.2, 0.1};
    const Baseline base{3.0, 1.0, 0.6};
    auto raw = [&](const std::vector<double>& z) {
        double q = 3.0, p = 1.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            q += c[i] * z[i];
            p += r[i] * z[i];
        }
        return eval_of(q, {p, p + 5.0});
    };
    for (auto variant : {CriterionVariant::C1, CriterionVariant::C2}) {
        for (bool pessimistic : {true, false}) {
            const CriterionConfig cfg{0.7, 1.3, 0.9, variant, pessimistic};
            const std::vector<double> z{0.4, -0.2, 0.9};
            const auto g = criterion::criterion_gradient(z, raw(z), {c, r}, base, cfg);
            for (std::size_t i = 0; i < z.size(); ++i) {
                auto zp = z, zm = z;
                zp[i] += 1e-6;
                zm[i] -= 1e-6;
                const double fd = (criterion::criterion(zp, raw(zp), base, cfg) -
                                   criterion::criterion(zm, raw(zm), base, cfg)) / 2e-6;
                CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("input contracts") {
    RawEvaluation bad{std::nan(""), {1.0}};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS((Baseline{0.0, 0.0, -1.0}.validate()), Error);
    CriterionConfig cfg;
    cfg.lambda_p = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(parse_criterion_variant("c2") == CriterionVariant::C2);
    CHECK_THROWS_AS(parse_criterion_variant("c3"), Error);
}
