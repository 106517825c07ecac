#include <cstring>
#include <vector>

#include <fmt/format.h>
#include <png.h>

#include "noisejector/error.hpp"
#include "noisejector/image/image.hpp"

namespace noisejector::image {

Image read_png(const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_file(&png, path.c_str()))
        fail(ErrorCode::Io, fmt::format("cannot read PNG '{}': {}", path.string(), png.message));

    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&png);
        fail(ErrorCode::Io, fmt::format("cannot decode PNG '{}': {}", path.string(), png.message));
    }

    Image img(png.width, png.height, color ? 3 : 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(buffer[i]) / 255.0;
    return img;
}

}  // namespace noisejector::image
