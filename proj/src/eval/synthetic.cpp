#include "noisejector/eval/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/image/image.hpp"

namespace noisejector::eval {

std::string_view to_string(SyntheticKind kind) noexcept {
    switch (kind) {
        case SyntheticKind::SeparableQuadratic: return "separable-quadratic";
        case SyntheticKind::RotatedQuadratic: return "rotated-quadratic";
        case SyntheticKind::PlateauArtifact: return "plateau-artifact";
    }
    return "unknown";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
    for (auto kind : {SyntheticKind::SeparableQuadratic, SyntheticKind::RotatedQuadratic,
                      SyntheticKind::PlateauArtifact}) {
        if (to_string(kind) == name) return kind;
    }
    fail(ErrorCode::Usage,
         fmt::format("unknown builtin evaluator '{}' (separable-quadratic|rotated-quadratic|plateau-artifact)", name));
}

namespace {

double parse_number(std::string_view key, std::string_view text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        fail(ErrorCode::Usage, fmt::format("option '{}' expects a number, got '{}'", key, text));
    return value;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        fail(ErrorCode::Usage, fmt::format("option '{}' expects a non-negative integer, got '{}'", key, text));
    return value;
}

}  // namespace

SyntheticEvaluatorSpec parse_synthetic_spec(std::string_view name, std::string_view options) {
    SyntheticEvaluatorSpec spec;
    spec.kind = parse_synthetic_kind(name);
    if (spec.kind == SyntheticKind::PlateauArtifact) spec.quality_gain = 4.0;

    while (!options.empty()) {
        const auto comma = options.find(',');
        const std::string_view item = options.substr(0, comma);
        options = comma == std::string_view::npos ? std::string_view{} : options.substr(comma + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) fail(ErrorCode::Usage, fmt::format("option '{}' must be key=value", item));
        const std::string_view key = item.substr(0, eq);
        const std::string_view value = item.substr(eq + 1);

        if (key == "dim") spec.dimension = parse_unsigned(key, value);
        else if (key == "seed") spec.seed = parse_unsigned(key, value);
        else if (key == "patches") spec.patches = parse_unsigned(key, value);
        else if (key == "blur") spec.blur = parse_number(key, value);
        else if (key == "image") spec.image = std::filesystem::path(value);
        else if (key == "gradient") spec.with_gradient = parse_unsigned(key, value) != 0;
        else if (key == "optimum_scale") spec.optimum_scale = parse_number(key, value);
        else if (key == "q0") spec.quality_offset = parse_number(key, value);
        else if (key == "cq") spec.quality_gain = parse_number(key, value);
        else if (key == "r0") spec.realism_offset = parse_number(key, value);
        else if (key == "cr") spec.realism_gain = parse_number(key, value);
        else if (key == "patch_curvature") spec.patch_curvature = parse_number(key, value);
        else if (key == "threshold") spec.artifact_threshold = parse_number(key, value);
        else if (key == "drop") spec.artifact_drop = parse_number(key, value);
        else fail(ErrorCode::Usage, fmt::format("unknown builtin evaluator option '{}'", key));
    }
    return spec;
}

SyntheticEvaluator::SyntheticEvaluator(SyntheticEvaluatorSpec spec) : spec_(std::move(spec)), patches_(spec_.patches) {
    const std::size_t d = spec_.dimension;
    if (d == 0) fail(ErrorCode::Usage, "builtin evaluator dimension must be positive");
    if (spec_.patches == 0) fail(ErrorCode::Usage, "builtin evaluator needs at least one patch");

    double blur = spec_.blur;
    if (spec_.image) {
        const image::Image img = image::read_png(*spec_.image);
        blur = image::blur_factor(img);
        patches_ = image::tile_patches(img.width, img.height).origins.size();
    }

    std::mt19937_64 rng(spec_.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    if (spec_.kind != SyntheticKind::PlateauArtifact) {
        if (spec_.optimum) {
            if (spec_.optimum->size() != d) fail(ErrorCode::Usage, "optimum length must equal the dimension");
            optimum_ = *spec_.optimum;
        } else {
            optimum_.resize(d);
            for (double& v : optimum_) v = spec_.optimum_scale * normal(rng);
        }
        if (spec_.curvature) {
            if (spec_.curvature->size() != d) fail(ErrorCode::Usage, "curvature length must equal the dimension");
            curvature_ = *spec_.curvature;
        } else {
            curvature_.resize(d);
            for (std::size_t i = 0; i < d; ++i) curvature_[i] = static_cast<double>(i + 1);
        }
        if (std::any_of(curvature_.begin(), curvature_.end(), [](double a) { return !(a >= 0.0); }))
            fail(ErrorCode::Usage, "curvatures must be non-negative");
    } else if (!(spec_.artifact_threshold > 0.0)) {
        fail(ErrorCode::Usage, "artifact threshold must be positive");
    }

    if (spec_.kind == SyntheticKind::RotatedQuadratic) {
        if (d > 4096) fail(ErrorCode::Usage, "rotated-quadratic is limited to dimension 4096");
        Eigen::MatrixXd gauss(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (Eigen::Index c = 0; c < gauss.cols(); ++c)
            for (Eigen::Index r = 0; r < gauss.rows(); ++r) gauss(r, c) = normal(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
        rotation_ = qr.householderQ();
    }

    const NoiseVector zero(d);
    baseline_ = Baseline::from_evaluation(evaluate(zero.span()), blur);
}

std::string SyntheticEvaluator::id() const {
    std::string out = fmt::format("builtin:{}:dim={},seed={}", to_string(spec_.kind), spec_.dimension, spec_.seed);
    if (spec_.with_gradient) out += ",gradient=1";
    if (spec_.image) out += fmt::format(",image={}", spec_.image->string());
    return out;
}

std::vector<double> SyntheticEvaluator::displacement(std::span<const double> z) const {
    const std::size_t d = spec_.dimension;
    std::vector<double> y(d);
    for (std::size_t i = 0; i < d; ++i) y[i] = z[i] - optimum_[i];
    if (spec_.kind == SyntheticKind::RotatedQuadratic) {
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(d));
        const Eigen::VectorXd ry = rotation_ * yv;
        std::copy(ry.data(), ry.data() + ry.size(), y.begin());
    }
    return y;
}

double SyntheticEvaluator::patch_weight(std::size_t patch, std::size_t coordinate) const noexcept {
    return spec_.patch_curvature * curvature_[coordinate] * (coordinate % patches_ == patch ? 2.0 : 1.0);
}

double SyntheticEvaluator::artifact_realism_threshold() const noexcept {
    return spec_.realism_offset - 0.5 * spec_.artifact_drop;
}

bool SyntheticEvaluator::in_artifact_region(std::span<const double> z) const {
    check_dimension(z);
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return sq / static_cast<double>(spec_.dimension) > spec_.artifact_threshold;
}

RawEvaluation SyntheticEvaluator::evaluate(std::span<const double> z) {
    check_dimension(z);
    const std::size_t d = spec_.dimension;
    RawEvaluation out;
    out.realism_patches.assign(patches_, spec_.realism_offset);

    if (spec_.kind == SyntheticKind::PlateauArtifact) {
        double sq = 0.0;
        for (double v : z) sq += v * v;
        const double u = sq / static_cast<double>(d);
        out.quality = spec_.quality_offset + spec_.quality_gain * u;
        if (u > spec_.artifact_threshold)
            out.realism_patches[0] = spec_.realism_offset - spec_.artifact_drop - (u - spec_.artifact_threshold);
        return out;
    }

    const auto y = displacement(z);
    double q_loss = 0.0;
    std::vector<double> p_loss(patches_, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double sq = y[i] * y[i];
        q_loss += curvature_[i] * sq;
        for (std::size_t j = 0; j < patches_; ++j) p_loss[j] += patch_weight(j, i) * sq;
    }
    out.quality = spec_.quality_offset + spec_.quality_gain - q_loss;
    for (std::size_t j = 0; j < patches_; ++j)
        out.realism_patches[j] = spec_.realism_offset + spec_.realism_gain - p_loss[j];
    return out;
}

criterion::RawGradient SyntheticEvaluator::gradient(std::span<const double> z) {
    if (!spec_.with_gradient) return Evaluator::gradient(z);
    check_dimension(z);
    const std::size_t d = spec_.dimension;
    criterion::RawGradient g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};

    if (spec_.kind == SyntheticKind::PlateauArtifact) {
        const bool artifact = in_artifact_region(z);
        for (std::size_t i = 0; i < d; ++i) {
            g.quality[i] = spec_.quality_gain * 2.0 * z[i] / static_cast<double>(d);
            if (artifact) g.realism[i] = -2.0 * z[i] / static_cast<double>(d);
        }
        return g;
    }

    const RawEvaluation at = evaluate(z);
    const auto weakest = static_cast<std::size_t>(
        std::min_element(at.realism_patches.begin(), at.realism_patches.end()) - at.realism_patches.begin());
    const auto y = displacement(z);
    for (std::size_t i = 0; i < d; ++i) {
        g.quality[i] = -2.0 * curvature_[i] * y[i];
        g.realism[i] = -2.0 * patch_weight(weakest, i) * y[i];
    }
    if (spec_.kind == SyntheticKind::RotatedQuadratic) {
        // d/dz of f(R (z - z*)) = R^T grad_y
        const auto dn = static_cast<Eigen::Index>(d);
        const Eigen::VectorXd gq = rotation_.transpose() * Eigen::Map<const Eigen::VectorXd>(g.quality.data(), dn);
        const Eigen::VectorXd gr = rotation_.transpose() * Eigen::Map<const Eigen::VectorXd>(g.realism.data(), dn);
        std::copy(gq.data(), gq.data() + dn, g.quality.begin());
        std::copy(gr.data(), gr.data() + dn, g.realism.begin());
    }
    return g;
}

std::unique_ptr<Evaluator> open_builtin(const SyntheticEvaluatorSpec& spec) {
    return std::make_unique<SyntheticEvaluator>(spec);
}

}  // namespace noisejector::eval
