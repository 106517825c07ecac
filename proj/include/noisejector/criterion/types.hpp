#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace noisejector {

// The decision variable: one amplitude per injected noise channel.
class NoiseVector {
public:
    NoiseVector() = default;
    explicit NoiseVector(std::size_t dimension) : values_(dimension, 0.0) {}
    explicit NoiseVector(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }

    std::span<const double> span() const noexcept { return values_; }
    std::span<double> span() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    bool operator==(const NoiseVector&) const = default;

private:
    std::vector<double> values_;
};

bool all_finite(std::span<const double> values) noexcept;

// One evaluator response for a candidate z.
struct RawEvaluation {
    double quality = 0.0;
    std::vector<double> realism_patches;

    // Throws InputContract when patches are empty or any value is non-finite.
    void validate() const;
    double min_patch() const;
};

// Reference scores of the z = 0 output, fixed for the lifetime of a run.
struct Baseline {
    double quality0 = 0.0;
    double realism0 = 0.0;
    double blur = 0.0;

    void validate() const;

    // realism0 is the minimum over the patch scores of the z = 0 evaluation.
    static Baseline from_evaluation(const RawEvaluation& at_zero, double blur);
};

enum class CriterionVariant { C1, C2 };

std::string_view to_string(CriterionVariant variant) noexcept;
CriterionVariant parse_criterion_variant(std::string_view text);

struct CriterionConfig {
    double lambda_q = 1.0;
    double lambda_r = 1.0;
    double lambda_p = 1.0;
    CriterionVariant variant = CriterionVariant::C1;
    // false selects raw baseline-relative scores (no L+ damping)
    bool pessimistic = true;

    void validate() const;
};

}  // namespace noisejector
