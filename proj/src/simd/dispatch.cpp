#include <cassert>
#include <cstdlib>
#include <string_view>

#include <spdlog/spdlog.h>

#include "noisejector/simd/kernels.hpp"

namespace noisejector::simd {

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

namespace {

const KernelTable& select() noexcept {
    const char* env = std::getenv("NOISEJECTOR_SIMD");
    const std::string_view request = env ? env : "auto";
    if (request == "scalar") return scalar_kernels();
    if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
    if (request == "avx2") spdlog::warn("NOISEJECTOR_SIMD=avx2 requested but unsupported; using scalar kernels");
    return scalar_kernels();
}

}  // namespace

const KernelTable& kernels() noexcept {
    static const KernelTable& active = select();
    return active;
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return kernels().dot(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const double> a) { return kernels().squared_norm(a.data(), a.size()); }

}  // namespace noisejector::simd
