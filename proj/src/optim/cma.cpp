#include "noisejector/optim/cma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "noisejector/error.hpp"
#include "noisejector/simd/kernels.hpp"

namespace noisejector::optim {

std::size_t default_cma_population(std::size_t dimension) {
    return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

CmaParameters cma_parameters(std::size_t dimension, std::size_t lambda, bool separable) {
    if (lambda < 2) fail(ErrorCode::Usage, "CMA population size must be at least 2");
    const auto n = static_cast<double>(dimension);
    CmaParameters p;
    p.lambda = lambda;
    p.mu = lambda / 2;

    p.weights.resize(p.mu);
    for (std::size_t i = 0; i < p.mu; ++i)
        p.weights[i] = std::log((static_cast<double>(lambda) + 1.0) / 2.0) - std::log(static_cast<double>(i + 1));
    const double sum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    double sum_sq = 0.0;
    for (double& w : p.weights) {
        w /= sum;
        sum_sq += w * w;
    }
    p.mueff = 1.0 / sum_sq;

    p.cs = (p.mueff + 2.0) / (n + p.mueff + 5.0);
    p.ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mueff - 1.0) / (n + 1.0)) - 1.0) + p.cs;
    p.cc = (4.0 + p.mueff / n) / (n + 4.0 + 2.0 * p.mueff / n);
    p.c1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mueff);
    p.cmu = std::min(1.0 - p.c1, 2.0 * (p.mueff - 2.0 + 1.0 / p.mueff) / ((n + 2.0) * (n + 2.0) + p.mueff));
    if (separable) {
        const double boost = (n + 2.0) / 3.0;
        p.c1 = std::min(1.0, p.c1 * boost);
        p.cmu = std::min(1.0 - p.c1, p.cmu * boost);
    }
    p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    return p;
}

namespace {

// Best first; ties keep ask order so the ranking ignores tell order.
std::vector<std::size_t> rank_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

bool is_flat(std::span<const double> values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo == *hi;
}

double clamp_scale(double value, std::size_t& clamp_events) {
    if (value < kMinScale) {
        ++clamp_events;
        return kMinScale;
    }
    if (value > kMaxScale || !std::isfinite(value)) {
        ++clamp_events;
        return kMaxScale;
    }
    return value;
}

double sigma0_from(const OptimizerSpec& spec) {
    const auto it = spec.hyperparams.find("sigma0");
    const double sigma0 = it == spec.hyperparams.end() ? kDefaultSigma0 : it->second;
    if (!(sigma0 > 0.0)) fail(ErrorCode::Usage, "sigma0 must be positive");
    return sigma0;
}

std::size_t lambda_from(const OptimizerSpec& spec) {
    const auto it = spec.hyperparams.find("popsize");
    if (it == spec.hyperparams.end()) return default_cma_population(spec.dimension);
    if (!(it->second >= 2.0)) fail(ErrorCode::Usage, "popsize must be at least 2");
    return static_cast<std::size_t>(it->second);
}

bool h_sigma(double ps_norm, const CmaParameters& p, std::size_t generation, double n) {
    const double decay = 1.0 - std::pow(1.0 - p.cs, 2.0 * static_cast<double>(generation + 1));
    return ps_norm / std::sqrt(decay) / p.chi_n < 1.4 + 2.0 / (n + 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// DiagonalCma

DiagonalCma::DiagonalCma(const OptimizerSpec& spec)
    : Optimizer(spec),
      params_(cma_parameters(spec.dimension, lambda_from(spec), true)),
      mean_(spec.dimension, 0.0),
      diag_c_(spec.dimension, 1.0),
      stddev_(spec.dimension, 1.0),
      ps_(spec.dimension, 0.0),
      pc_(spec.dimension, 0.0),
      sigma_(sigma0_from(spec)),
      noise_(spec.dimension, 0.0) {
    check_hyperparams({"sigma0", "popsize"});
    check_budget_covers_population();
}

std::vector<NoiseVector> DiagonalCma::propose(std::size_t max_count) {
    const std::size_t count = std::min(params_.lambda, max_count);
    const auto& k = simd::kernels();
    std::vector<NoiseVector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        fill_standard_normal(noise_);
        NoiseVector x(dimension());
        k.scaled_offset(x.data(), mean_.data(), stddev_.data(), noise_.data(), sigma_, dimension());
        out.push_back(std::move(x));
    }
    return out;
}

void DiagonalCma::update(std::span<const NoiseVector> candidates, std::span<const double> values) {
    // a truncated final batch cannot be ranked against a full population
    if (candidates.size() < params_.lambda) return;

    const auto& p = params_;
    const auto& k = simd::kernels();
    const std::size_t d = dimension();
    const auto n = static_cast<double>(d);

    if (is_flat(values)) {
        sigma_ = clamp_scale(sigma_ * std::exp(0.2 + p.cs / p.ds), clamp_events_);
        spdlog::debug("dcma: flat fitness at generation {}, sigma -> {}", generation_, sigma_);
        ++generation_;
        return;
    }

    const auto order = rank_descending(values);
    steps_.resize(p.mu);
    std::vector<double> yw(d, 0.0);
    for (std::size_t r = 0; r < p.mu; ++r) {
        steps_[r].resize(d);
        k.centered_scale(steps_[r].data(), candidates[order[r]].data(), mean_.data(), 1.0 / sigma_, d);
        k.axpy(yw.data(), steps_[r].data(), p.weights[r], d);
    }

    // m <- m + sigma * y_w
    k.axpy(mean_.data(), yw.data(), sigma_, d);

    const double ps_decay = 1.0 - p.cs;
    const double ps_gain = std::sqrt(p.cs * (2.0 - p.cs) * p.mueff);
    double ps_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        ps_[i] = ps_decay * ps_[i] + ps_gain * (yw[i] / stddev_[i]);
        ps_sq += ps_[i] * ps_[i];
    }
    const double ps_norm = std::sqrt(ps_sq);
    const bool hsig = h_sigma(ps_norm, p, generation_, n);

    const double pc_gain = hsig ? std::sqrt(p.cc * (2.0 - p.cc) * p.mueff) : 0.0;
    for (std::size_t i = 0; i < d; ++i) pc_[i] = (1.0 - p.cc) * pc_[i] + pc_gain * yw[i];

    const double keep = 1.0 - p.c1 - p.cmu + (hsig ? 0.0 : p.c1 * p.cc * (2.0 - p.cc));
    k.scale_add_square(diag_c_.data(), pc_.data(), keep, p.c1, d);
    for (std::size_t r = 0; r < p.mu; ++r) k.scale_add_square(diag_c_.data(), steps_[r].data(), 1.0, p.cmu * p.weights[r], d);

    const std::size_t before = clamp_events_;
    for (std::size_t i = 0; i < d; ++i) {
        diag_c_[i] = clamp_scale(diag_c_[i], clamp_events_);
        stddev_[i] = std::sqrt(diag_c_[i]);
    }

    sigma_ = clamp_scale(sigma_ * std::exp((p.cs / p.ds) * (ps_norm / p.chi_n - 1.0)), clamp_events_);
    // warn once per run; later clamps are counted in the diagnostics
    if (clamp_events_ != before)
        spdlog::log(before == 0 ? spdlog::level::warn : spdlog::level::debug,
                    "dcma: clamped {} scale value(s) to [{}, {}] at generation {}", clamp_events_ - before, kMinScale,
                    kMaxScale, generation_);
    ++generation_;
}

Diagnostics DiagonalCma::diagnostics() const { return {sigma_, generation_, clamp_events_}; }

// ---------------------------------------------------------------------------
// FullCma

FullCma::FullCma(const OptimizerSpec& spec)
    : Optimizer(spec),
      params_(cma_parameters(spec.dimension, lambda_from(spec), false)),
      mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dimension))),
      sigma_(sigma0_from(spec)) {
    check_hyperparams({"sigma0", "popsize", "max_dimension"});
    const double max_dim = hyperparam("max_dimension", static_cast<double>(kDefaultMaxDimension));
    if (static_cast<double>(spec.dimension) > max_dim)
        fail(ErrorCode::Usage, fmt::format("full CMA is limited to dimension {} (got {}); use dcma", max_dim,
                                           spec.dimension));
    check_budget_covers_population();

    const auto n = static_cast<Eigen::Index>(spec.dimension);
    cov_ = Eigen::MatrixXd::Identity(n, n);
    basis_ = Eigen::MatrixXd::Identity(n, n);
    axis_scale_ = Eigen::VectorXd::Ones(n);
    ps_ = Eigen::VectorXd::Zero(n);
    pc_ = Eigen::VectorXd::Zero(n);
    const double rate = (params_.c1 + params_.cmu) * static_cast<double>(spec.dimension) * 10.0;
    eigen_interval_ = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(params_.lambda) / rate));
}

std::vector<NoiseVector> FullCma::propose(std::size_t max_count) {
    const std::size_t count = std::min(params_.lambda, max_count);
    const auto n = mean_.size();
    std::vector<NoiseVector> out;
    out.reserve(count);
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) z[j] = standard_normal();
        const Eigen::VectorXd x = mean_ + sigma_ * (basis_ * axis_scale_.cwiseProduct(z));
        out.emplace_back(std::vector<double>(x.data(), x.data() + n));
    }
    return out;
}

void FullCma::refresh_eigensystem() {
    cov_ = cov_.triangularView<Eigen::Upper>();
    cov_ = cov_.selfadjointView<Eigen::Upper>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
    if (solver.info() != Eigen::Success) {
        spdlog::warn("cma: eigendecomposition failed at generation {}; resetting covariance", generation_);
        cov_.setIdentity();
        basis_.setIdentity();
        axis_scale_.setOnes();
        ++clamp_events_;
        return;
    }
    Eigen::VectorXd eig = solver.eigenvalues();
    const std::size_t before = clamp_events_;
    bool clamped = false;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        const double v = clamp_scale(eig[i], clamp_events_);
        clamped = clamped || v != eig[i];
        eig[i] = v;
    }
    basis_ = solver.eigenvectors();
    axis_scale_ = eig.cwiseSqrt();
    if (clamped) {
        cov_ = basis_ * eig.asDiagonal() * basis_.transpose();
        spdlog::log(before == 0 ? spdlog::level::warn : spdlog::level::debug,
                    "cma: clamped covariance eigenvalues at generation {}", generation_);
    }
    eigen_age_ = 0;
}

void FullCma::update(std::span<const NoiseVector> candidates, std::span<const double> values) {
    if (candidates.size() < params_.lambda) return;

    const auto& p = params_;
    const auto n = mean_.size();
    const auto nd = static_cast<double>(n);

    if (is_flat(values)) {
        sigma_ = clamp_scale(sigma_ * std::exp(0.2 + p.cs / p.ds), clamp_events_);
        ++generation_;
        return;
    }

    const auto order = rank_descending(values);
    Eigen::MatrixXd steps(n, static_cast<Eigen::Index>(p.mu));
    for (std::size_t r = 0; r < p.mu; ++r) {
        const Eigen::Map<const Eigen::VectorXd> x(candidates[order[r]].data(), n);
        steps.col(static_cast<Eigen::Index>(r)) = (x - mean_) / sigma_;
    }
    const Eigen::Map<const Eigen::VectorXd> w(p.weights.data(), static_cast<Eigen::Index>(p.mu));
    const Eigen::VectorXd yw = steps * w;

    mean_ += sigma_ * yw;

    // C^{-1/2} y_w = B D^{-1} B^T y_w
    const Eigen::VectorXd whitened = basis_ * (basis_.transpose() * yw).cwiseQuotient(axis_scale_);
    ps_ = (1.0 - p.cs) * ps_ + std::sqrt(p.cs * (2.0 - p.cs) * p.mueff) * whitened;
    const double ps_norm = ps_.norm();
    const bool hsig = h_sigma(ps_norm, p, generation_, nd);

    pc_ = (1.0 - p.cc) * pc_ + (hsig ? std::sqrt(p.cc * (2.0 - p.cc) * p.mueff) : 0.0) * yw;

    const double keep = 1.0 - p.c1 - p.cmu + (hsig ? 0.0 : p.c1 * p.cc * (2.0 - p.cc));
    cov_ = keep * cov_ + p.c1 * (pc_ * pc_.transpose()) + p.cmu * (steps * w.asDiagonal() * steps.transpose());

    sigma_ = clamp_scale(sigma_ * std::exp((p.cs / p.ds) * (ps_norm / p.chi_n - 1.0)), clamp_events_);

    ++generation_;
    if (++eigen_age_ >= eigen_interval_) refresh_eigensystem();
}

Diagnostics FullCma::diagnostics() const { return {sigma_, generation_, clamp_events_}; }

}  // namespace noisejector::optim
