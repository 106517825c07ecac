#include "noisejector/optim/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "noisejector/error.hpp"
#include "noisejector/optim/cma.hpp"
#include "noisejector/optim/simple.hpp"

namespace noisejector::optim {

std::string_view to_string(OptimizerKind kind) noexcept {
    switch (kind) {
        case OptimizerKind::DCMA: return "dcma";
        case OptimizerKind::CMA: return "cma";
        case OptimizerKind::OnePlusOne: return "oneplusone";
        case OptimizerKind::DE: return "de";
        case OptimizerKind::RandomSearch: return "random";
        case OptimizerKind::GD: return "gd";
        case OptimizerKind::Adam: return "adam";
    }
    return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view text) {
    for (OptimizerKind kind : all_optimizer_kinds()) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::Usage,
         fmt::format("unknown optimizer '{}', expected one of dcma|cma|oneplusone|de|random|gd|adam", text));
}

const std::vector<OptimizerKind>& all_optimizer_kinds() {
    static const std::vector<OptimizerKind> kinds{
        OptimizerKind::RandomSearch, OptimizerKind::CMA, OptimizerKind::DCMA, OptimizerKind::OnePlusOne,
        OptimizerKind::DE,           OptimizerKind::GD,  OptimizerKind::Adam,
    };
    return kinds;
}

std::uint64_t bit_hash(std::span<const double> values) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        h ^= std::bit_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
    }
    return h;
}

Optimizer::Optimizer(const OptimizerSpec& spec) : spec_(spec), rng_(spec.seed) {
    if (spec_.dimension == 0) fail(ErrorCode::Usage, "optimizer dimension must be positive");
    if (spec_.budget == 0) fail(ErrorCode::Usage, "optimizer budget must be positive");
}

double Optimizer::hyperparam(std::string_view key, double fallback) const {
    const auto it = spec_.hyperparams.find(key);
    return it == spec_.hyperparams.end() ? fallback : it->second;
}

void Optimizer::check_hyperparams(std::initializer_list<std::string_view> known) const {
    for (const auto& [key, value] : spec_.hyperparams) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            fail(ErrorCode::Usage, fmt::format("optimizer '{}' has no hyperparameter '{}' (known: {})",
                                               to_string(spec_.kind), key, fmt::join(known, ", ")));
        if (!std::isfinite(value))
            fail(ErrorCode::Usage, fmt::format("hyperparameter '{}' must be finite", key));
    }
}

void Optimizer::check_budget_covers_population() const {
    if (spec_.budget < population_size())
        fail(ErrorCode::Usage, fmt::format("budget {} is smaller than the {} population size {}", spec_.budget,
                                           to_string(spec_.kind), population_size()));
}

void Optimizer::fill_standard_normal(std::span<double> out) {
    for (double& v : out) v = normal_(rng_);
}

std::vector<NoiseVector> Optimizer::ask() {
    if (!pending_.empty()) fail(ErrorCode::InputContract, "ask() called while a batch is still awaiting tell()");
    if (wants_gradient()) fail(ErrorCode::InputContract, "ask() called while a gradient is awaited");
    if (exhausted())
        fail(ErrorCode::BudgetExhausted, fmt::format("budget of {} evaluations exhausted", spec_.budget));

    std::vector<NoiseVector> batch = propose(remaining());
    if (batch.empty() || batch.size() > remaining())
        fail(ErrorCode::InputContract, "optimizer proposed an invalid batch size");

    pending_ = batch;
    pending_index_.clear();
    for (std::size_t i = 0; i < pending_.size(); ++i) pending_index_.emplace(bit_hash(pending_[i].span()), i);
    return batch;
}

void Optimizer::tell(std::span<const Evaluated> pairs) {
    if (pending_.empty()) fail(ErrorCode::UnknownCandidate, "tell() without a pending ask batch");
    if (pairs.size() != pending_.size())
        fail(ErrorCode::InputContract,
             fmt::format("tell() received {} pairs for a batch of {}", pairs.size(), pending_.size()));

    std::vector<double> values(pending_.size(), 0.0);
    std::vector<bool> seen(pending_.size(), false);
    for (const Evaluated& pair : pairs) {
        if (!std::isfinite(pair.value))
            fail(ErrorCode::NonFiniteValue, fmt::format("non-finite fitness {} rejected", pair.value));
        const auto [lo, hi] = pending_index_.equal_range(bit_hash(pair.z.span()));
        std::optional<std::size_t> slot;
        for (auto it = lo; it != hi; ++it) {
            if (!seen[it->second] && pending_[it->second] == pair.z) {
                slot = it->second;
                break;
            }
        }
        if (!slot) fail(ErrorCode::UnknownCandidate, "tell() received a candidate that was not asked");
        seen[*slot] = true;
        values[*slot] = pair.value;
    }

    for (std::size_t i = 0; i < pending_.size(); ++i) {
        if (!best_ || values[i] > best_->value) best_ = BestSeen{pending_[i], values[i], evaluations_used_ + i};
    }
    evaluations_used_ += pending_.size();

    std::vector<NoiseVector> batch = std::move(pending_);
    pending_.clear();
    pending_index_.clear();
    update(batch, values);
}

void Optimizer::tell_gradient(std::span<const double>) {
    fail(ErrorCode::Unsupported,
         fmt::format("optimizer '{}' does not consume gradients", to_string(spec_.kind)));
}

const NoiseVector& Optimizer::recommend() const {
    if (!best_) fail(ErrorCode::NoRecommendation, "recommend() called before any tell()");
    return best_->z;
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec) {
    switch (spec.kind) {
        case OptimizerKind::DCMA: return std::make_unique<DiagonalCma>(spec);
        case OptimizerKind::CMA: return std::make_unique<FullCma>(spec);
        case OptimizerKind::OnePlusOne: return std::make_unique<OnePlusOne>(spec);
        case OptimizerKind::DE: return std::make_unique<DifferentialEvolution>(spec);
        case OptimizerKind::RandomSearch: return std::make_unique<RandomSearch>(spec);
        case OptimizerKind::GD:
        case OptimizerKind::Adam: return std::make_unique<GradientAscent>(spec);
    }
    fail(ErrorCode::Usage, "unknown optimizer kind");
}

}  // namespace noisejector::optim
