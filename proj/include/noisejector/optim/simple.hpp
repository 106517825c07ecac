#pragma once

#include <functional>

#include "noisejector/optim/optimizer.hpp"

namespace noisejector::optim {

// (1+1)-ES with the one-fifth success rule: sigma *= exp(1/3) on a strict
// improvement, exp(-1/12) otherwise, which is stationary at a 1/5 success
// rate. The first ask evaluates the starting incumbent (z = 0).
class OnePlusOne final : public Optimizer {
public:
    explicit OnePlusOne(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override { return 1; }
    Diagnostics diagnostics() const override;

    const NoiseVector& incumbent() const noexcept { return incumbent_; }
    double sigma() const noexcept { return sigma_; }

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector> candidates, std::span<const double> values) override;

private:
    NoiseVector incumbent_;
    std::optional<double> incumbent_value_;
    double sigma_;
    std::size_t successes_ = 0;
    std::size_t steps_ = 0;
    std::size_t clamp_events_ = 0;
};

// DE/rand/1/bin with greedy one-to-one replacement. The initial population
// is drawn from N(0, sigma0^2 I).
class DifferentialEvolution final : public Optimizer {
public:
    explicit DifferentialEvolution(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override { return popsize_; }
    Diagnostics diagnostics() const override;

    const std::vector<NoiseVector>& population() const noexcept { return population_; }
    // Parent index of each candidate in the pending trial batch.
    const std::vector<std::size_t>& trial_parents() const noexcept { return trial_parents_; }

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector> candidates, std::span<const double> values) override;

private:
    std::size_t popsize_;
    double f_;
    double cr_;
    double sigma0_;
    std::vector<NoiseVector> population_;
    std::vector<double> fitness_;
    std::vector<std::size_t> trial_parents_;
    std::size_t generation_ = 0;
};

// i.i.d. N(0, scale^2 I) samples, `batch` per ask.
class RandomSearch final : public Optimizer {
public:
    explicit RandomSearch(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override { return batch_; }

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector>, std::span<const double>) override {}

private:
    std::size_t batch_;
    double scale_;
};

// Forward-difference probe set {z, z + eps e_1, ..., z + eps e_d}.
std::vector<NoiseVector> forward_difference_probes(const NoiseVector& z, double eps);

// g_i = (f(z + eps e_i) - f(z)) / eps from values ordered as the probes.
std::vector<double> forward_difference_from_values(std::span<const double> values, double eps);

// Charges d + 1 calls of f; throws NonFiniteValue if any value is not finite.
std::vector<double> finite_difference_gradient(const std::function<double(const NoiseVector&)>& f,
                                               const NoiseVector& z, double eps);

// Gradient ascent (GD) and Adam on the criterion. Without evaluator gradients
// every step costs d + 1 evaluations (forward differences, eps = 1e-3); with
// them a step costs one evaluation of the iterate.
class GradientAscent final : public Optimizer {
public:
    explicit GradientAscent(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override;
    Diagnostics diagnostics() const override;
    bool wants_gradient() const noexcept override { return spec().evaluator_gradient && awaiting_gradient_; }
    void tell_gradient(std::span<const double> gradient) override;

    const NoiseVector& iterate() const noexcept { return iterate_; }
    std::size_t steps() const noexcept { return steps_; }

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector> candidates, std::span<const double> values) override;

private:
    void step(std::span<const double> gradient);

    bool adam_;
    double lr_;
    double eps_;
    double beta1_;
    double beta2_;
    double adam_eps_;
    NoiseVector iterate_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t steps_ = 0;
    bool awaiting_gradient_ = false;
};

}  // namespace noisejector::optim
