#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string_view>
#include <random>
#include <vector>

#include <doctest.h>

#include "noisejector/simd/kernels.hpp"

using namespace noisejector::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> dist(0.0, 3.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
    return true;
}

// Lengths cover empty input, sub-vector tails and several full blocks; the
// offset makes every pointer unaligned for 32-byte loads.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 67, 1000, 27600};

}  // namespace

TEST_CASE("scalar kernels follow their definitions") {
    const auto& k = scalar_kernels();
    const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
    CHECK(k.dot(a.data(), b.data(), 3) == 12.0);
    CHECK(k.squared_norm(a.data(), 3) == 14.0);
    std::vector<double> out(3);
    k.scaled_offset(out.data(), a.data(), b.data(), a.data(), 0.5, 3);
    CHECK(out == std::vector<double>{3.0, -3.0, 12.0});
    k.centered_scale(out.data(), b.data(), a.data(), 2.0, 3);
    CHECK(out == std::vector<double>{6.0, -14.0, 6.0});
    std::vector<double> y{1.0, 1.0, 1.0};
    k.axpy(y.data(), a.data(), -1.0, 3);
    CHECK(y == std::vector<double>{0.0, -1.0, -2.0});
    y = {1.0, 2.0, 3.0};
    k.scale_add_square(y.data(), b.data(), 0.5, 2.0, 3);
    CHECK(y == std::vector<double>{32.5, 51.0, 73.5});
    const std::vector<double> c{1.0}, l{2.0}, r{3.0}, u{0.0}, d{5.0};
    k.stencil5(out.data(), c.data(), l.data(), r.data(), u.data(), d.data(), 1);
    CHECK(out[0] == 6.0);
}

TEST_CASE("active kernel table honours NOISEJECTOR_SIMD") {
    const char* env = std::getenv("NOISEJECTOR_SIMD");
    if (env && std::string_view(env) == "scalar") CHECK(kernels().isa == Isa::Scalar);
    if (!env && avx2_kernels()) CHECK(kernels().isa == Isa::Avx2);
}

TEST_CASE("avx2 kernels match the scalar reference") {
    const KernelTable* avx = avx2_kernels();
    if (!avx) {
        MESSAGE("AVX2 unavailable on this CPU or build; equivalence not exercised");
        return;
    }
    const auto& ref = scalar_kernels();
    std::mt19937_64 rng(42);
    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const auto a = random_vector(rng, n + 1), b = random_vector(rng, n + 1), c = random_vector(rng, n + 1);
        const auto d = random_vector(rng, n + 1), e = random_vector(rng, n + 1);
        const double* pa = a.data() + 1;
        const double* pb = b.data() + 1;

        // reductions differ only by summation order
        double abs_sum = 0.0, sq_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::abs(pa[i] * pb[i]);
            sq_sum += pa[i] * pa[i];
        }
        CHECK(std::abs(avx->dot(pa, pb, n) - ref.dot(pa, pb, n)) <= 1e-14 * abs_sum + 1e-300);
        CHECK(std::abs(avx->squared_norm(pa, n) - ref.squared_norm(pa, n)) <= 1e-14 * sq_sum + 1e-300);

        // element-wise kernels are bit-identical
        std::vector<double> o1(n + 1, 0.0), o2(n + 1, 0.0);
        ref.scaled_offset(o1.data() + 1, pa, pb, c.data() + 1, 0.37, n);
        avx->scaled_offset(o2.data() + 1, pa, pb, c.data() + 1, 0.37, n);
        CHECK(bit_equal(o1, o2));

        ref.centered_scale(o1.data() + 1, pa, pb, 1.7, n);
        avx->centered_scale(o2.data() + 1, pa, pb, 1.7, n);
        CHECK(bit_equal(o1, o2));

        std::vector<double> y1(c), y2(c);
        ref.axpy(y1.data() + 1, pa, -0.3, n);
        avx->axpy(y2.data() + 1, pa, -0.3, n);
        CHECK(bit_equal(y1, y2));

        y1 = c;
        y2 = c;
        ref.scale_add_square(y1.data() + 1, pa, 0.8, 0.2, n);
        avx->scale_add_square(y2.data() + 1, pa, 0.8, 0.2, n);
        CHECK(bit_equal(y1, y2));

        ref.stencil5(o1.data() + 1, pa, pb, c.data() + 1, d.data() + 1, e.data() + 1, n);
        avx->stencil5(o2.data() + 1, pa, pb, c.data() + 1, d.data() + 1, e.data() + 1, n);
        CHECK(bit_equal(o1, o2));
    }
}

TEST_CASE("stencil is exactly zero on constant input for both variants") {
    std::vector<const KernelTable*> tables{&scalar_kernels()};
    if (avx2_kernels()) tables.push_back(avx2_kernels());
    for (const auto* k : tables) {
        for (double value : {0.0, 0.1, 0.3, 0.7137254901960784, 1.0}) {
            const std::vector<double> row(19, value);
            std::vector<double> out(19, 1.0);
            k->stencil5(out.data(), row.data(), row.data(), row.data(), row.data(), row.data(), row.size());
            for (double v : out) CHECK(v == 0.0);
        }
    }
}
