#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "noisejector/criterion/types.hpp"

namespace noisejector::optim {

enum class OptimizerKind { DCMA, CMA, OnePlusOne, DE, RandomSearch, GD, Adam };

std::string_view to_string(OptimizerKind kind) noexcept;
OptimizerKind parse_optimizer_kind(std::string_view text);

// Table row order used by reports: Random Search, CMA, DCMA, (1+1), DE, GD, Adam.
const std::vector<OptimizerKind>& all_optimizer_kinds();

using Hyperparams = std::map<std::string, double, std::less<>>;

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::DCMA;
    std::size_t dimension = 0;
    std::size_t budget = 10'000;
    std::uint64_t seed = 0;
    Hyperparams hyperparams;
    // GD/Adam only: step from evaluator-supplied gradients (tell_gradient)
    // instead of forward-difference probes.
    bool evaluator_gradient = false;
};

struct Evaluated {
    NoiseVector z;
    double value = 0.0;
};

struct BestSeen {
    NoiseVector z;
    double value = 0.0;
    std::size_t evaluation = 0;  // 0-based index in evaluation order
};

struct Diagnostics {
    double sigma = 0.0;
    std::size_t generation = 0;
    std::size_t clamp_events = 0;
};

// Ask/tell maximizer. ask() proposes a batch, tell() takes the batch back
// with one fitness per candidate in any order. Single owner; not thread-safe.
class Optimizer {
public:
    explicit Optimizer(const OptimizerSpec& spec);
    virtual ~Optimizer() = default;

    Optimizer(const Optimizer&) = delete;
    Optimizer& operator=(const Optimizer&) = delete;

    // The last batch may be truncated so evaluations never exceed the budget.
    std::vector<NoiseVector> ask();

    // Every candidate of the pending batch exactly once; fitness must be finite.
    void tell(std::span<const Evaluated> pairs);

    // Gradient-mode GD/Adam only: the criterion gradient at the last told iterate.
    virtual void tell_gradient(std::span<const double> gradient);
    virtual bool wants_gradient() const noexcept { return false; }

    // Best candidate seen so far (not the search distribution's mean); ties
    // keep the earliest evaluation.
    const NoiseVector& recommend() const;
    const std::optional<BestSeen>& best() const noexcept { return best_; }

    OptimizerKind kind() const noexcept { return spec_.kind; }
    const OptimizerSpec& spec() const noexcept { return spec_; }
    std::size_t dimension() const noexcept { return spec_.dimension; }
    std::size_t budget() const noexcept { return spec_.budget; }
    std::size_t evaluations_used() const noexcept { return evaluations_used_; }
    std::size_t remaining() const noexcept { return spec_.budget - evaluations_used_; }
    bool exhausted() const noexcept { return evaluations_used_ >= spec_.budget; }

    // Candidates per full batch.
    virtual std::size_t population_size() const noexcept = 0;
    virtual Diagnostics diagnostics() const { return {}; }

protected:
    virtual std::vector<NoiseVector> propose(std::size_t max_count) = 0;
    // Candidates and values in ask order; a final truncated batch may be short.
    virtual void update(std::span<const NoiseVector> candidates, std::span<const double> values) = 0;

    double hyperparam(std::string_view key, double fallback) const;
    // Throws Usage for keys outside `known`.
    void check_hyperparams(std::initializer_list<std::string_view> known) const;
    // Throws Usage when a full batch does not fit the budget.
    void check_budget_covers_population() const;

    double standard_normal() { return normal_(rng_); }
    void fill_standard_normal(std::span<double> out);
    std::mt19937_64& rng() noexcept { return rng_; }

private:
    OptimizerSpec spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::size_t evaluations_used_ = 0;
    std::optional<BestSeen> best_;
    std::vector<NoiseVector> pending_;
    std::unordered_multimap<std::uint64_t, std::size_t> pending_index_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec);

// Hash of the exact bit pattern of a vector (identifies asked candidates).
std::uint64_t bit_hash(std::span<const double> values) noexcept;

inline constexpr double kDefaultSigma0 = 0.5;
inline constexpr double kMinScale = 1e-20;
inline constexpr double kMaxScale = 1e20;

}  // namespace noisejector::optim
