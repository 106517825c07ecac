#include "noisejector/criterion/types.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "noisejector/error.hpp"

namespace noisejector {

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void RawEvaluation::validate() const {
    if (realism_patches.empty()) fail(ErrorCode::InputContract, "evaluation has no realism patches");
    if (!std::isfinite(quality) || !all_finite(realism_patches))
        fail(ErrorCode::InputContract, "evaluation contains non-finite scores");
}

double RawEvaluation::min_patch() const {
    if (realism_patches.empty()) fail(ErrorCode::InputContract, "evaluation has no realism patches");
    return *std::min_element(realism_patches.begin(), realism_patches.end());
}

void Baseline::validate() const {
    if (!std::isfinite(quality0) || !std::isfinite(realism0) || !std::isfinite(blur))
        fail(ErrorCode::InputContract, "baseline contains non-finite values");
    if (blur < 0.0) fail(ErrorCode::InputContract, fmt::format("baseline blur must be >= 0, got {}", blur));
}

Baseline Baseline::from_evaluation(const RawEvaluation& at_zero, double blur) {
    at_zero.validate();
    Baseline base{at_zero.quality, at_zero.min_patch(), blur};
    base.validate();
    return base;
}

std::string_view to_string(CriterionVariant variant) noexcept {
    return variant == CriterionVariant::C1 ? "c1" : "c2";
}

CriterionVariant parse_criterion_variant(std::string_view text) {
    if (text == "c1" || text == "C1") return CriterionVariant::C1;
    if (text == "c2" || text == "C2") return CriterionVariant::C2;
    fail(ErrorCode::Usage, fmt::format("unknown criterion '{}', expected c1 or c2", text));
}

void CriterionConfig::validate() const {
    for (double w : {lambda_q, lambda_r, lambda_p}) {
        if (!std::isfinite(w) || w < 0.0)
            fail(ErrorCode::Usage, fmt::format("criterion weights must be finite and >= 0, got {}", w));
    }
}

}  // namespace noisejector
