#pragma once

// CMA-ES with cumulative step-size adaptation, in two flavours:
//   DiagonalCma - covariance restricted to its diagonal (O(n) time and memory
//                 per sample), learning rates scaled by (n + 2) / 3.
//   FullCma     - full covariance with a lazily refreshed eigendecomposition.
//
// Strategy parameters follow the standard published defaults:
//   lambda = 4 + floor(3 ln n), mu = floor(lambda / 2),
//   w_i ~ ln((lambda + 1) / 2) - ln i (i <= mu, normalised),
//   c_sigma = (mu_eff + 2) / (n + mu_eff + 5),
//   d_sigma = 1 + 2 max(0, sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma,
//   c_c = (4 + mu_eff / n) / (n + 4 + 2 mu_eff / n),
//   c_1 = 2 / ((n + 1.3)^2 + mu_eff),
//   c_mu = min(1 - c_1, 2 (mu_eff - 2 + 1 / mu_eff) / ((n + 2)^2 + mu_eff)).
//
// Fitness is maximized. A batch whose values are all identical carries no
// ranking information: the mean, paths and covariance are kept and sigma is
// inflated by exp(0.2 + c_sigma / d_sigma).

#include <Eigen/Dense>

#include "noisejector/optim/optimizer.hpp"

namespace noisejector::optim {

std::size_t default_cma_population(std::size_t dimension);

struct CmaParameters {
    std::size_t lambda = 0;
    std::size_t mu = 0;
    std::vector<double> weights;  // mu positive weights summing to 1
    double mueff = 0.0;
    double cs = 0.0;
    double ds = 0.0;
    double cc = 0.0;
    double c1 = 0.0;
    double cmu = 0.0;
    double chi_n = 0.0;  // E|N(0, I)|
};

CmaParameters cma_parameters(std::size_t dimension, std::size_t lambda, bool separable);

class DiagonalCma final : public Optimizer {
public:
    explicit DiagonalCma(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override { return params_.lambda; }
    Diagnostics diagnostics() const override;

    const CmaParameters& parameters() const noexcept { return params_; }
    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<double>& covariance_diagonal() const noexcept { return diag_c_; }
    double sigma() const noexcept { return sigma_; }

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector> candidates, std::span<const double> values) override;

private:
    CmaParameters params_;
    std::vector<double> mean_;
    std::vector<double> diag_c_;
    std::vector<double> stddev_;  // sqrt of diag_c_
    std::vector<double> ps_;
    std::vector<double> pc_;
    double sigma_;
    std::size_t generation_ = 0;
    std::size_t clamp_events_ = 0;
    std::vector<double> noise_;
    std::vector<std::vector<double>> steps_;
};

class FullCma final : public Optimizer {
public:
    explicit FullCma(const OptimizerSpec& spec);

    std::size_t population_size() const noexcept override { return params_.lambda; }
    Diagnostics diagnostics() const override;

    const CmaParameters& parameters() const noexcept { return params_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
    double sigma() const noexcept { return sigma_; }

    // Full covariance needs O(n^2) memory; larger problems are rejected.
    static constexpr std::size_t kDefaultMaxDimension = 4096;

protected:
    std::vector<NoiseVector> propose(std::size_t max_count) override;
    void update(std::span<const NoiseVector> candidates, std::span<const double> values) override;

private:
    void refresh_eigensystem();

    CmaParameters params_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd basis_;       // eigenvectors of cov_
    Eigen::VectorXd axis_scale_;  // sqrt of eigenvalues
    Eigen::VectorXd ps_;
    Eigen::VectorXd pc_;
    double sigma_;
    std::size_t generation_ = 0;
    std::size_t eigen_interval_ = 1;
    std::size_t eigen_age_ = 0;
    std::size_t clamp_events_ = 0;
};

}  // namespace noisejector::optim
