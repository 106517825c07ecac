#include "noisejector/simd/kernels.hpp"

namespace noisejector::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

void scaled_offset_scalar(double* out, const double* base, const double* stddev, const double* noise,
                          double scale, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = stddev[i] * noise[i];
        out[i] = base[i] + scale * t;
    }
}

void centered_scale_scalar(double* out, const double* x, const double* center, double inv_scale,
                           std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - center[i]) * inv_scale;
}

void axpy_scalar(double* y, const double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = a * x[i];
        y[i] = y[i] + t;
    }
}

void scale_add_square_scalar(double* y, const double* x, double a, double b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double sq = x[i] * x[i];
        const double lhs = a * y[i];
        const double rhs = b * sq;
        y[i] = lhs + rhs;
    }
}

void stencil5_scalar(double* out, const double* center, const double* left, const double* right,
                     const double* up, const double* down, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double c = center[i];
        out[i] = ((up[i] - c) + (down[i] - c)) + ((left[i] - c) + (right[i] - c));
    }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{
        Isa::Scalar,          dot_scalar,   squared_norm_scalar,     scaled_offset_scalar,
        centered_scale_scalar, axpy_scalar, scale_add_square_scalar, stencil5_scalar,
    };
    return table;
}

}  // namespace noisejector::simd
