#pragma once

// Pessimistic quality/realism scoring and the penalized criteria.
//
//   L+(x)  = log(1 + x) for x > 0, x otherwise
//   S_q(z) = L+(K(z) - K(0))
//   S_r(z) = L+(min_p D_p(z) - min_p D_p(0))
//   C1(z)  = lq S_q + lr S_r - (lp / d) |z|^2
//   C2(z)  = lq S_q + lr S_r - (lp B / d) |z|^2,  B = blur factor of the z = 0 output
//
// Raw mode (pessimistic = false) drops the L+ wrapper and keeps the baseline
// subtraction. All arithmetic is double precision; everything here is pure.

#include <span>
#include <vector>

#include "noisejector/criterion/types.hpp"

namespace noisejector::criterion {

double l_plus(double x) noexcept;

// Derivative of l_plus; the right derivative (1) at 0.
double l_plus_derivative(double x) noexcept;

double quality_score(const RawEvaluation& eval, const Baseline& base, const CriterionConfig& cfg);
double realism_score(const RawEvaluation& eval, const Baseline& base, const CriterionConfig& cfg);

// Coefficient multiplying |z|^2 in the penalty: lp / d (C1) or lp B / d (C2).
double penalty_coefficient(std::size_t dimension, const Baseline& base, const CriterionConfig& cfg);

struct Breakdown {
    double quality_score = 0.0;
    double realism_score = 0.0;
    double penalty = 0.0;  // subtracted term, >= 0
    double value = 0.0;
};

Breakdown evaluate(std::span<const double> z, const RawEvaluation& eval, const Baseline& base,
                   const CriterionConfig& cfg);

double criterion(std::span<const double> z, const RawEvaluation& eval, const Baseline& base,
                 const CriterionConfig& cfg);

// Gradients of the raw scores with respect to z, as supplied by an evaluator.
// `realism` is the gradient of the minimum patch score (zero if unknown).
struct RawGradient {
    std::vector<double> quality;
    std::vector<double> realism;
};

// Chain rule through L+ and the penalty; `eval` must be the evaluation at z.
std::vector<double> criterion_gradient(std::span<const double> z, const RawEvaluation& eval,
                                       const RawGradient& grad, const Baseline& base,
                                       const CriterionConfig& cfg);

}  // namespace noisejector::criterion
