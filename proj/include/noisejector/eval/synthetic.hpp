#pragma once

// Closed-form stand-ins for a generator/scorer pair, deterministic given a seed.
//
// SeparableQuadratic (a = curvature, z* = optimum, P patches):
//   quality(z)  = q0 + c_q - sum_i a_i (z_i - z*_i)^2
//   patch_j(z)  = r0 + c_r - s sum_i a_i (1 + [i mod P == j]) (z_i - z*_i)^2
// RotatedQuadratic: the same with (z - z*) replaced by R (z - z*) for a seeded
//   random rotation R.
// PlateauArtifact (u = |z|^2 / d):
//   quality(z)  = q0 + c_q u                       (rises without bound)
//   patch_0(z)  = r0 if u <= tau else r0 - drop - (u - tau)
//   patch_j(z)  = r0 for j > 0                     (flat plateau)
//   so optimizing quality alone ends in the region where patch 0 collapses.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "noisejector/eval/evaluator.hpp"

namespace noisejector::eval {

enum class SyntheticKind { SeparableQuadratic, RotatedQuadratic, PlateauArtifact };

std::string_view to_string(SyntheticKind kind) noexcept;
SyntheticKind parse_synthetic_kind(std::string_view name);

struct SyntheticEvaluatorSpec {
    SyntheticKind kind = SyntheticKind::SeparableQuadratic;
    std::size_t dimension = 8;
    std::uint64_t seed = 0;

    // Quadratic kinds: z* defaults to seeded N(0, optimum_scale^2) draws and
    // a_i to i (1-based), the separable ellipsoid.
    std::optional<std::vector<double>> optimum;
    std::optional<std::vector<double>> curvature;
    double optimum_scale = 0.5;

    double quality_offset = 50.0;   // q0
    double quality_gain = 2.0;      // c_q (PlateauArtifact: slope in u)
    double realism_offset = 0.0;    // r0
    double realism_gain = 1.0;      // c_r
    double patch_curvature = 1.0;   // s; 0 gives flat patch scores
    std::size_t patches = 3;

    double artifact_threshold = 0.5;  // tau, in mean squared amplitude
    double artifact_drop = 1.0;

    // Blur factor declared in the baseline, unless `image` is given, in which
    // case it is computed from the PNG and the patch count follows its tiling.
    double blur = 0.25;
    std::optional<std::filesystem::path> image;

    bool with_gradient = false;
};

// Parses "key=value,..." options (dim, seed, patches, blur, image, gradient,
// optimum_scale, q0, cq, r0, cr, patch_curvature, threshold, drop).
SyntheticEvaluatorSpec parse_synthetic_spec(std::string_view name, std::string_view options);

class SyntheticEvaluator final : public Evaluator {
public:
    explicit SyntheticEvaluator(SyntheticEvaluatorSpec spec);

    std::size_t dimension() const noexcept override { return spec_.dimension; }
    std::size_t patch_count() const noexcept override { return patches_; }
    const Baseline& baseline() const noexcept override { return baseline_; }
    Capabilities capabilities() const noexcept override { return {spec_.with_gradient, true, 0}; }
    std::string id() const override;

    RawEvaluation evaluate(std::span<const double> z) override;
    criterion::RawGradient gradient(std::span<const double> z) override;

    const SyntheticEvaluatorSpec& spec() const noexcept { return spec_; }
    const std::vector<double>& optimum() const noexcept { return optimum_; }
    const std::vector<double>& curvature() const noexcept { return curvature_; }
    // Orthogonal matrix used by RotatedQuadratic (empty for the other kinds).
    const Eigen::MatrixXd& rotation() const noexcept { return rotation_; }

    // PlateauArtifact: patch scores below this mark the artifact region.
    double artifact_realism_threshold() const noexcept;
    bool in_artifact_region(std::span<const double> z) const;

private:
    std::vector<double> displacement(std::span<const double> z) const;
    double patch_weight(std::size_t patch, std::size_t coordinate) const noexcept;

    SyntheticEvaluatorSpec spec_;
    std::size_t patches_;
    std::vector<double> optimum_;
    std::vector<double> curvature_;
    Eigen::MatrixXd rotation_;
    Baseline baseline_;
};

std::unique_ptr<Evaluator> open_builtin(const SyntheticEvaluatorSpec& spec);

}  // namespace noisejector::eval
