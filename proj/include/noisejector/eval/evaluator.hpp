#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "noisejector/criterion/criterion.hpp"
#include "noisejector/criterion/types.hpp"

namespace noisejector::eval {

struct Capabilities {
    bool supports_gradient = false;
    bool supports_batch = true;
    // Maximum in-flight evaluations; 0 means unbounded.
    std::size_t parallelism = 0;
};

// Black box z -> (quality, per-patch realism). Dimension, patch count and
// baseline are fixed for the lifetime of the handle, and evaluate(0) must
// reproduce the baseline.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    virtual std::size_t dimension() const noexcept = 0;
    virtual std::size_t patch_count() const noexcept = 0;
    virtual const Baseline& baseline() const noexcept = 0;
    virtual Capabilities capabilities() const noexcept = 0;
    // Stable description used in reports, e.g. "builtin:separable-quadratic:dim=8,seed=1".
    virtual std::string id() const = 0;

    // Throws DimensionMismatch when z has the wrong length.
    virtual RawEvaluation evaluate(std::span<const double> z) = 0;
    // Results in input order.
    virtual std::vector<RawEvaluation> evaluate_batch(std::span<const NoiseVector> batch);
    // Gradients of quality and of the minimum patch score; Unsupported unless
    // capabilities().supports_gradient.
    virtual criterion::RawGradient gradient(std::span<const double> z);

    // Diagnostic output captured from the evaluator (child stderr for external ones).
    virtual std::string captured_log() const { return {}; }

protected:
    void check_dimension(std::span<const double> z) const;
};

struct ExternalOptions;

// "builtin:NAME[:key=value,...]" or "exec:COMMAND". `external` applies to exec: only.
std::unique_ptr<Evaluator> open_evaluator(const std::string& locator);
std::unique_ptr<Evaluator> open_evaluator(const std::string& locator, const ExternalOptions& external);

}  // namespace noisejector::eval
