#include "noisejector/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define NOISEJECTOR_HAVE_AVX2_TU 1
#include <immintrin.h>
#endif

namespace noisejector::simd {

#ifdef NOISEJECTOR_HAVE_AVX2_TU
namespace {

#define NJ_AVX2 __attribute__((target("avx2,fma")))

NJ_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    const __m128d sh = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

NJ_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

NJ_AVX2 double squared_norm_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

NJ_AVX2 void scaled_offset_avx2(double* out, const double* base, const double* stddev,
                                const double* noise, double scale, std::size_t n) {
    const __m256d s = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(_mm256_loadu_pd(stddev + i), _mm256_loadu_pd(noise + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(base + i), _mm256_mul_pd(s, t)));
    }
    for (; i < n; ++i) {
        const double t = stddev[i] * noise[i];
        out[i] = base[i] + scale * t;
    }
}

NJ_AVX2 void centered_scale_avx2(double* out, const double* x, const double* center, double inv_scale,
                                 std::size_t n) {
    const __m256d s = _mm256_set1_pd(inv_scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(center + i));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(d, s));
    }
    for (; i < n; ++i) out[i] = (x[i] - center[i]) * inv_scale;
}

NJ_AVX2 void axpy_avx2(double* y, const double* x, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) {
        const double t = a * x[i];
        y[i] = y[i] + t;
    }
}

NJ_AVX2 void scale_add_square_avx2(double* y, const double* x, double a, double b, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d lhs = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
        const __m256d rhs = _mm256_mul_pd(vb, _mm256_mul_pd(xv, xv));
        _mm256_storeu_pd(y + i, _mm256_add_pd(lhs, rhs));
    }
    for (; i < n; ++i) {
        const double sq = x[i] * x[i];
        const double lhs = a * y[i];
        const double rhs = b * sq;
        y[i] = lhs + rhs;
    }
}

NJ_AVX2 void stencil5_avx2(double* out, const double* center, const double* left, const double* right,
                           const double* up, const double* down, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d c = _mm256_loadu_pd(center + i);
        const __m256d vertical = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(up + i), c),
                                               _mm256_sub_pd(_mm256_loadu_pd(down + i), c));
        const __m256d horizontal = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(left + i), c),
                                                 _mm256_sub_pd(_mm256_loadu_pd(right + i), c));
        _mm256_storeu_pd(out + i, _mm256_add_pd(vertical, horizontal));
    }
    for (; i < n; ++i) {
        const double c = center[i];
        out[i] = ((up[i] - c) + (down[i] - c)) + ((left[i] - c) + (right[i] - c));
    }
}

#undef NJ_AVX2

bool cpu_has_avx2() noexcept {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static const KernelTable table{
        Isa::Avx2,          dot_avx2,  squared_norm_avx2,     scaled_offset_avx2,
        centered_scale_avx2, axpy_avx2, scale_add_square_avx2, stencil5_avx2,
    };
    static const bool supported = cpu_has_avx2();
    return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() noexcept { return nullptr; }

#endif

}  // namespace noisejector::simd
