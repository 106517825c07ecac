#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace noisejector::image {

// Row-major, channel-interleaved real image with values in [0, 1].
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
        : width(w), height(h), channels(c), data(w * h * c, fill) {}

    double at(std::size_t x, std::size_t y, std::size_t c = 0) const noexcept {
        return data[(y * width + x) * channels + c];
    }
    double& at(std::size_t x, std::size_t y, std::size_t c = 0) noexcept {
        return data[(y * width + x) * channels + c];
    }

    // Throws InputContract on a size mismatch, channel count outside {1, 3}
    // or values outside [0, 1].
    void validate() const;
};

// Single-channel real field (Laplacian responses are not range-limited).
struct Field {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t x, std::size_t y) const noexcept { return values[y * width + x]; }
};

struct PatchOrigin {
    std::size_t x = 0;
    std::size_t y = 0;
    bool operator==(const PatchOrigin&) const = default;
};

struct PatchGrid {
    std::size_t patch_size = 128;
    // Extent of each patch; smaller than patch_size only when the image is.
    std::size_t patch_width = 0;
    std::size_t patch_height = 0;
    std::vector<PatchOrigin> origins;
};

inline constexpr std::size_t kDefaultPatchSize = 128;

Image to_grayscale(const Image& img);

// 4-neighbour Laplacian with replicate (clamp-to-edge) padding.
Field laplacian(const Image& gray);

// Population standard deviation of the grayscale Laplacian, divided by sqrt(1000).
double blur_factor(const Image& img);

// Row-major origins; the last row/column is clamped to (w - patch, h - patch)
// so edge patches overlap instead of being padded. An image smaller than the
// patch in a dimension gets a single patch spanning that dimension.
PatchGrid tile_patches(std::size_t width, std::size_t height, std::size_t patch = kDefaultPatchSize);

// 8- or 16-bit PNG; grayscale inputs load as one channel, everything else as
// RGB (alpha dropped, palettes expanded).
Image read_png(const std::filesystem::path& path);

}  // namespace noisejector::image
