#pragma once

// Data-parallel inner loops shared by the optimizers, the criterion and the
// image kernels. Every kernel has a scalar reference implementation; vector
// variants are selected once at runtime from the host CPU features.
//
// Element-wise kernels evaluate the same operation sequence per element in
// every variant (no contraction into FMA), so they are bit-identical across
// variants. Reductions (dot, squared_norm) reassociate the sum and agree with
// the scalar reference to rounding only.

#include <cstddef>
#include <span>
#include <string_view>

namespace noisejector::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
    Isa isa;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_norm)(const double* a, std::size_t n);

    // out[i] = base[i] + scale * (stddev[i] * noise[i])
    void (*scaled_offset)(double* out, const double* base, const double* stddev,
                          const double* noise, double scale, std::size_t n);

    // out[i] = (x[i] - center[i]) * inv_scale
    void (*centered_scale)(double* out, const double* x, const double* center, double inv_scale,
                           std::size_t n);

    // y[i] += a * x[i]
    void (*axpy)(double* y, const double* x, double a, std::size_t n);

    // y[i] = a * y[i] + b * (x[i] * x[i])
    void (*scale_add_square)(double* y, const double* x, double a, double b, std::size_t n);

    // out[i] = ((up - c) + (down - c)) + ((left - c) + (right - c)), c = center[i]
    // (the 4-neighbour Laplacian; exactly zero on constant input)
    void (*stencil5)(double* out, const double* center, const double* left, const double* right,
                     const double* up, const double* down, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

// Null when the binary was built without the variant or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;

// The table used by the library. Chosen on first use: the widest supported
// variant, unless NOISEJECTOR_SIMD=scalar|avx2 overrides it.
const KernelTable& kernels() noexcept;

// Convenience wrappers over kernels().
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace noisejector::simd
