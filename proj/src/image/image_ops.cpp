#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "noisejector/error.hpp"
#include "noisejector/image/image.hpp"
#include "noisejector/simd/kernels.hpp"

namespace noisejector::image {

void Image::validate() const {
    if (channels != 1 && channels != 3)
        fail(ErrorCode::InputContract, fmt::format("unsupported channel count {}", channels));
    if (width == 0 || height == 0) fail(ErrorCode::InputContract, "image must be at least 1x1");
    if (data.size() != width * height * channels)
        fail(ErrorCode::InputContract,
             fmt::format("image data has {} values, expected {}", data.size(), width * height * channels));
    for (double v : data) {
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InputContract, "image values must lie in [0, 1]");
    }
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) fail(ErrorCode::InputContract, fmt::format("unsupported channel count {}", img.channels));

    Image gray(img.width, img.height, 1);
    for (std::size_t i = 0, n = img.width * img.height; i < n; ++i) {
        const double r = img.data[3 * i];
        const double g = img.data[3 * i + 1];
        const double b = img.data[3 * i + 2];
        // neutral pixels map to themselves exactly; the weights sum to 1
        const double luma = (r == g && g == b) ? r : 0.299 * r + 0.587 * g + 0.114 * b;
        gray.data[i] = std::clamp(luma, 0.0, 1.0);
    }
    return gray;
}

Field laplacian(const Image& gray) {
    if (gray.channels != 1) fail(ErrorCode::InputContract, "laplacian expects a single-channel image");
    const std::size_t w = gray.width;
    const std::size_t h = gray.height;
    if (w == 0 || h == 0) fail(ErrorCode::InputContract, "laplacian expects a non-empty image");

    Field out{w, h, std::vector<double>(w * h)};
    std::vector<double> padded(w + 2);
    const auto& k = simd::kernels();
    for (std::size_t y = 0; y < h; ++y) {
        const double* row = gray.data.data() + y * w;
        const double* up = gray.data.data() + (y == 0 ? 0 : y - 1) * w;
        const double* down = gray.data.data() + (y + 1 == h ? y : y + 1) * w;
        padded.front() = row[0];
        std::copy(row, row + w, padded.begin() + 1);
        padded.back() = row[w - 1];
        k.stencil5(out.values.data() + y * w, padded.data() + 1, padded.data(), padded.data() + 2, up, down, w);
    }
    return out;
}

double blur_factor(const Image& img) {
    img.validate();
    const Field lap = laplacian(to_grayscale(img));
    const auto n = static_cast<double>(lap.values.size());
    double mean = 0.0;
    for (double v : lap.values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : lap.values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n) / std::sqrt(1000.0);
}

namespace {

std::vector<std::size_t> axis_origins(std::size_t extent, std::size_t patch) {
    if (extent <= patch) return {0};
    const std::size_t count = (extent + patch - 1) / patch;
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i + 1 < count; ++i) out[i] = i * patch;
    out.back() = extent - patch;
    return out;
}

}  // namespace

PatchGrid tile_patches(std::size_t width, std::size_t height, std::size_t patch) {
    if (patch == 0) fail(ErrorCode::InputContract, "patch size must be positive");
    if (width == 0 || height == 0) fail(ErrorCode::InputContract, "cannot tile an empty image");

    PatchGrid grid;
    grid.patch_size = patch;
    grid.patch_width = std::min(width, patch);
    grid.patch_height = std::min(height, patch);
    const auto xs = axis_origins(width, patch);
    const auto ys = axis_origins(height, patch);
    grid.origins.reserve(xs.size() * ys.size());
    for (std::size_t y : ys) {
        for (std::size_t x : xs) grid.origins.push_back({x, y});
    }
    return grid;
}

}  // namespace noisejector::image
