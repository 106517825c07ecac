#include "noisejector/optim/simple.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/simd/kernels.hpp"

namespace noisejector::optim {

namespace {

double positive(double value, std::string_view name) {
    if (!(value > 0.0)) fail(ErrorCode::Usage, fmt::format("{} must be positive, got {}", name, value));
    return value;
}

double clamp_sigma(double sigma, std::size_t& clamp_events) {
    if (sigma < kMinScale || sigma > kMaxScale) {
        ++clamp_events;
        return std::clamp(sigma, kMinScale, kMaxScale);
    }
    return sigma;
}

}  // namespace

// ---------------------------------------------------------------------------
// (1+1)-ES

OnePlusOne::OnePlusOne(const OptimizerSpec& spec)
    : Optimizer(spec), incumbent_(spec.dimension), sigma_(kDefaultSigma0) {
    check_hyperparams({"sigma0"});
    sigma_ = positive(hyperparam("sigma0", kDefaultSigma0), "sigma0");
    check_budget_covers_population();
}

std::vector<NoiseVector> OnePlusOne::propose(std::size_t) {
    if (!incumbent_value_) return {incumbent_};
    NoiseVector x(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) x[i] = incumbent_[i] + sigma_ * standard_normal();
    return {std::move(x)};
}

void OnePlusOne::update(std::span<const NoiseVector> candidates, std::span<const double> values) {
    if (!incumbent_value_) {
        incumbent_value_ = values[0];
        return;
    }
    ++steps_;
    if (values[0] > *incumbent_value_) {
        incumbent_ = candidates[0];
        incumbent_value_ = values[0];
        ++successes_;
        sigma_ = clamp_sigma(sigma_ * std::exp(1.0 / 3.0), clamp_events_);
    } else {
        sigma_ = clamp_sigma(sigma_ * std::exp(-1.0 / 12.0), clamp_events_);
    }
}

Diagnostics OnePlusOne::diagnostics() const { return {sigma_, steps_, clamp_events_}; }

// ---------------------------------------------------------------------------
// Differential evolution

DifferentialEvolution::DifferentialEvolution(const OptimizerSpec& spec)
    : Optimizer(spec), popsize_(30), f_(0.8), cr_(0.9), sigma0_(kDefaultSigma0) {
    check_hyperparams({"popsize", "F", "CR", "sigma0"});
    const double popsize = hyperparam("popsize", 30.0);
    if (popsize < 4.0) fail(ErrorCode::Usage, "DE popsize must be at least 4 for rand/1 mutation");
    popsize_ = static_cast<std::size_t>(popsize);
    f_ = positive(hyperparam("F", 0.8), "F");
    cr_ = hyperparam("CR", 0.9);
    if (cr_ < 0.0 || cr_ > 1.0) fail(ErrorCode::Usage, "CR must lie in [0, 1]");
    sigma0_ = positive(hyperparam("sigma0", kDefaultSigma0), "sigma0");
    check_budget_covers_population();
}

std::vector<NoiseVector> DifferentialEvolution::propose(std::size_t max_count) {
    const std::size_t d = dimension();
    const std::size_t count = std::min(popsize_, max_count);
    std::vector<NoiseVector> out;
    out.reserve(count);
    trial_parents_.clear();

    if (population_.empty()) {
        for (std::size_t i = 0; i < count; ++i) {
            NoiseVector x(d);
            for (std::size_t j = 0; j < d; ++j) x[j] = sigma0_ * standard_normal();
            out.push_back(std::move(x));
            trial_parents_.push_back(i);
        }
        return out;
    }

    const std::size_t np = population_.size();
    std::uniform_int_distribution<std::size_t> pick(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_gene(0, d - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t r1, r2, r3;
        do { r1 = pick(rng()); } while (r1 == i);
        do { r2 = pick(rng()); } while (r2 == i || r2 == r1);
        do { r3 = pick(rng()); } while (r3 == i || r3 == r1 || r3 == r2);
        const std::size_t forced = pick_gene(rng());

        NoiseVector trial = population_[i];
        for (std::size_t j = 0; j < d; ++j) {
            if (j == forced || unit(rng()) < cr_)
                trial[j] = population_[r1][j] + f_ * (population_[r2][j] - population_[r3][j]);
        }
        out.push_back(std::move(trial));
        trial_parents_.push_back(i);
    }
    return out;
}

void DifferentialEvolution::update(std::span<const NoiseVector> candidates, std::span<const double> values) {
    if (population_.empty()) {
        population_.assign(candidates.begin(), candidates.end());
        fitness_.assign(values.begin(), values.end());
        return;
    }
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const std::size_t parent = trial_parents_[k];
        if (values[k] >= fitness_[parent]) {
            population_[parent] = candidates[k];
            fitness_[parent] = values[k];
        }
    }
    ++generation_;
}

Diagnostics DifferentialEvolution::diagnostics() const { return {f_, generation_, 0}; }

// ---------------------------------------------------------------------------
// Random search

RandomSearch::RandomSearch(const OptimizerSpec& spec) : Optimizer(spec), batch_(1), scale_(1.0) {
    check_hyperparams({"batch", "scale"});
    const double batch = hyperparam("batch", 1.0);
    if (batch < 1.0) fail(ErrorCode::Usage, "random search batch must be at least 1");
    batch_ = static_cast<std::size_t>(batch);
    scale_ = positive(hyperparam("scale", 1.0), "scale");
    check_budget_covers_population();
}

std::vector<NoiseVector> RandomSearch::propose(std::size_t max_count) {
    const std::size_t count = std::min(batch_, max_count);
    std::vector<NoiseVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        NoiseVector x(dimension());
        for (std::size_t j = 0; j < dimension(); ++j) x[j] = scale_ * standard_normal();
        out.push_back(std::move(x));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences

std::vector<NoiseVector> forward_difference_probes(const NoiseVector& z, double eps) {
    if (!(eps > 0.0)) fail(ErrorCode::InputContract, "finite-difference step must be positive");
    std::vector<NoiseVector> probes;
    probes.reserve(z.size() + 1);
    probes.push_back(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
        NoiseVector p = z;
        p[i] += eps;
        probes.push_back(std::move(p));
    }
    return probes;
}

std::vector<double> forward_difference_from_values(std::span<const double> values, double eps) {
    if (values.size() < 2) fail(ErrorCode::InputContract, "need f(z) and at least one probe value");
    if (!all_finite(values)) fail(ErrorCode::NonFiniteValue, "finite-difference probe returned a non-finite value");
    std::vector<double> g(values.size() - 1);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (values[i + 1] - values[0]) / eps;
    return g;
}

std::vector<double> finite_difference_gradient(const std::function<double(const NoiseVector&)>& f,
                                               const NoiseVector& z, double eps) {
    const auto probes = forward_difference_probes(z, eps);
    std::vector<double> values;
    values.reserve(probes.size());
    for (const auto& p : probes) values.push_back(f(p));
    return forward_difference_from_values(values, eps);
}

// ---------------------------------------------------------------------------
// GD / Adam

GradientAscent::GradientAscent(const OptimizerSpec& spec)
    : Optimizer(spec),
      adam_(spec.kind == OptimizerKind::Adam),
      lr_(0.1),
      eps_(1e-3),
      beta1_(0.9),
      beta2_(0.999),
      adam_eps_(1e-8),
      iterate_(spec.dimension) {
    if (adam_) {
        check_hyperparams({"lr", "fd_eps", "beta1", "beta2", "adam_eps"});
        beta1_ = hyperparam("beta1", 0.9);
        beta2_ = hyperparam("beta2", 0.999);
        adam_eps_ = positive(hyperparam("adam_eps", 1e-8), "adam_eps");
        if (beta1_ < 0.0 || beta1_ >= 1.0 || beta2_ < 0.0 || beta2_ >= 1.0)
            fail(ErrorCode::Usage, "Adam betas must lie in [0, 1)");
        m_.assign(spec.dimension, 0.0);
        v_.assign(spec.dimension, 0.0);
    } else {
        check_hyperparams({"lr", "fd_eps"});
    }
    lr_ = positive(hyperparam("lr", 0.1), "lr");
    eps_ = positive(hyperparam("fd_eps", 1e-3), "fd_eps");
    check_budget_covers_population();
}

std::size_t GradientAscent::population_size() const noexcept {
    return spec().evaluator_gradient ? 1 : dimension() + 1;
}

std::vector<NoiseVector> GradientAscent::propose(std::size_t max_count) {
    if (spec().evaluator_gradient) return {iterate_};
    auto probes = forward_difference_probes(iterate_, eps_);
    if (probes.size() > max_count) probes.resize(max_count);
    return probes;
}

void GradientAscent::update(std::span<const NoiseVector> candidates, std::span<const double> values) {
    if (spec().evaluator_gradient) {
        awaiting_gradient_ = true;
        return;
    }
    if (candidates.size() < dimension() + 1) return;
    step(forward_difference_from_values(values, eps_));
}

void GradientAscent::tell_gradient(std::span<const double> gradient) {
    if (!spec().evaluator_gradient || !awaiting_gradient_)
        fail(ErrorCode::InputContract, "tell_gradient() without a told iterate awaiting its gradient");
    if (gradient.size() != dimension())
        fail(ErrorCode::DimensionMismatch,
             fmt::format("gradient has {} entries, expected {}", gradient.size(), dimension()));
    if (!all_finite(gradient)) fail(ErrorCode::NonFiniteValue, "non-finite gradient rejected");
    awaiting_gradient_ = false;
    step(gradient);
}

void GradientAscent::step(std::span<const double> g) {
    ++steps_;
    const std::size_t d = dimension();
    if (!adam_) {
        simd::kernels().axpy(iterate_.data(), g.data(), lr_, d);
        return;
    }
    const double t = static_cast<double>(steps_);
    const double bias1 = 1.0 - std::pow(beta1_, t);
    const double bias2 = 1.0 - std::pow(beta2_, t);
    for (std::size_t i = 0; i < d; ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
        const double m_hat = m_[i] / bias1;
        const double v_hat = v_[i] / bias2;
        iterate_[i] += lr_ * m_hat / (std::sqrt(v_hat) + adam_eps_);
    }
}

Diagnostics GradientAscent::diagnostics() const { return {lr_, steps_, 0}; }

}  // namespace noisejector::optim
