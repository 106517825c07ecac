#include "noisejector/criterion/criterion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/simd/kernels.hpp"

namespace noisejector::criterion {

double l_plus(double x) noexcept { return x > 0.0 ? std::log1p(x) : x; }

double l_plus_derivative(double x) noexcept { return x > 0.0 ? 1.0 / (1.0 + x) : 1.0; }

namespace {

double relative(double x, const CriterionConfig& cfg) noexcept { return cfg.pessimistic ? l_plus(x) : x; }

double relative_slope(double x, const CriterionConfig& cfg) noexcept {
    return cfg.pessimistic ? l_plus_derivative(x) : 1.0;
}

}  // namespace

double quality_score(const RawEvaluation& eval, const Baseline& base, const CriterionConfig& cfg) {
    return relative(eval.quality - base.quality0, cfg);
}

double realism_score(const RawEvaluation& eval, const Baseline& base, const CriterionConfig& cfg) {
    return relative(eval.min_patch() - base.realism0, cfg);
}

double penalty_coefficient(std::size_t dimension, const Baseline& base, const CriterionConfig& cfg) {
    if (dimension == 0) fail(ErrorCode::InputContract, "noise dimension must be positive");
    const double scale = cfg.variant == CriterionVariant::C2 ? cfg.lambda_p * base.blur : cfg.lambda_p;
    return scale / static_cast<double>(dimension);
}

Breakdown evaluate(std::span<const double> z, const RawEvaluation& eval, const Baseline& base,
                   const CriterionConfig& cfg) {
    Breakdown out;
    out.quality_score = quality_score(eval, base, cfg);
    out.realism_score = realism_score(eval, base, cfg);
    out.penalty = penalty_coefficient(z.size(), base, cfg) * simd::squared_norm(z);
    out.value = (cfg.lambda_q * out.quality_score + cfg.lambda_r * out.realism_score) - out.penalty;
    return out;
}

double criterion(std::span<const double> z, const RawEvaluation& eval, const Baseline& base,
                 const CriterionConfig& cfg) {
    return evaluate(z, eval, base, cfg).value;
}

std::vector<double> criterion_gradient(std::span<const double> z, const RawEvaluation& eval,
                                       const RawGradient& grad, const Baseline& base,
                                       const CriterionConfig& cfg) {
    const std::size_t d = z.size();
    if (grad.quality.size() != d || (!grad.realism.empty() && grad.realism.size() != d))
        fail(ErrorCode::DimensionMismatch,
             fmt::format("gradient length mismatch: z has {}, quality {}, realism {}", d, grad.quality.size(),
                         grad.realism.size()));

    const double wq = cfg.lambda_q * relative_slope(eval.quality - base.quality0, cfg);
    const double wr = cfg.lambda_r * relative_slope(eval.min_patch() - base.realism0, cfg);
    const double wp = -2.0 * penalty_coefficient(d, base, cfg);

    std::vector<double> out(d, 0.0);
    const auto& k = simd::kernels();
    k.axpy(out.data(), grad.quality.data(), wq, d);
    if (!grad.realism.empty()) k.axpy(out.data(), grad.realism.data(), wr, d);
    k.axpy(out.data(), z.data(), wp, d);
    return out;
}

}  // namespace noisejector::criterion
