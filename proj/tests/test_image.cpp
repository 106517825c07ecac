#include <cmath>
#include <fstream>
#include <random>

#include <doctest.h>
#include <json.hpp>

#include "noisejector/error.hpp"
#include "noisejector/image/image.hpp"
#include "oracles.hpp"

using namespace noisejector;
using namespace noisejector::image;

namespace {

Image random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t c) {
    std::uniform_int_distribution<int> byte(0, 255);
    Image img(w, h, c);
    for (double& v : img.data) v = byte(rng) / 255.0;
    return img;
}

bool covers_every_pixel(std::size_t w, std::size_t h) {
    const auto grid = tile_patches(w, h);
    std::vector<int> diff((w + 1) * (h + 1), 0);
    for (const auto& o : grid.origins) {
        if (o.x + grid.patch_width > w || o.y + grid.patch_height > h) return false;
        diff[o.y * (w + 1) + o.x] += 1;
        diff[o.y * (w + 1) + o.x + grid.patch_width] -= 1;
        diff[(o.y + grid.patch_height) * (w + 1) + o.x] -= 1;
        diff[(o.y + grid.patch_height) * (w + 1) + o.x + grid.patch_width] += 1;
    }
    std::vector<int> row(w + 1, 0);
    for (std::size_t y = 0; y < h; ++y) {
        int run = 0;
        for (std::size_t x = 0; x < w; ++x) {
            row[x] += diff[y * (w + 1) + x];
            run += row[x];
            if (run <= 0) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("grayscale examples") {
    std::mt19937_64 rng(1);
    const Image gray = random_image(rng, 5, 4, 1);
    CHECK(to_grayscale(gray).data == gray.data);

    const Image white(6, 3, 3, 1.0);
    for (double v : to_grayscale(white).data) CHECK(v == 1.0);

    Image red(4, 4, 3, 0.0);
    for (std::size_t i = 0; i < 16; ++i) red.data[3 * i] = 1.0;
    for (double v : to_grayscale(red).data) CHECK(v == doctest::Approx(0.299).epsilon(1e-15));

    const Image two_channel(2, 2, 2, 0.5);
    CHECK_THROWS_AS(to_grayscale(two_channel), Error);
}

TEST_CASE("laplacian examples") {
    const Image flat(7, 5, 1, 0.3);
    for (double v : laplacian(flat).values) CHECK(v == 0.0);

    Image dot(3, 3, 1, 0.0);
    dot.at(1, 1) = 1.0;
    const Field f = laplacian(dot);
    CHECK(f.at(1, 1) == -4.0);
    CHECK(f.at(0, 1) == 1.0);
    CHECK(f.at(0, 0) == 0.0);

    Image one(1, 1, 1, 0.4);
    CHECK(laplacian(one).values == std::vector<double>{0.0});
}

TEST_CASE("laplacian and blur match the loop oracles") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> side(1, 32);
    for (int k = 0; k < 20; ++k) {
        const std::size_t w = side(rng), h = side(rng), c = k % 2 ? 3 : 1;
        CAPTURE(w);
        CAPTURE(h);
        const Image img = random_image(rng, w, h, c);
        const auto ref = oracle::laplacian(oracle::grayscale(img.data, w, h, c));
        const Field got = laplacian(to_grayscale(img));
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) CHECK(std::abs(got.at(x, y) - ref[y][x]) <= 1e-12);
        CHECK(std::abs(blur_factor(img) - oracle::blur_factor(img.data, w, h, c)) <= 1e-12);
    }
}

TEST_CASE("laplacian commutes with flips") {
    std::mt19937_64 rng(9);
    const Image img = random_image(rng, 9, 6, 1);
    Image flipped(9, 6, 1);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 9; ++x) flipped.at(8 - x, 5 - y) = img.at(x, y);
    const Field a = laplacian(img), b = laplacian(flipped);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 9; ++x) CHECK(a.at(x, y) == doctest::Approx(b.at(8 - x, 5 - y)).epsilon(1e-15));
}

TEST_CASE("blur factor properties") {
    CHECK(blur_factor(Image(16, 16, 3, 0.6)) == 0.0);

    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    Image img(16, 16, 1);
    for (double& v : img.data) v = u(rng);
    const double b = blur_factor(img);
    CHECK(b > 0.0);

    Image scaled = img, shifted = img;
    for (double& v : scaled.data) v *= 0.5;
    for (double& v : shifted.data) v += 0.25;
    CHECK(blur_factor(scaled) == doctest::Approx(0.5 * b).epsilon(1e-12));
    CHECK(blur_factor(shifted) == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("tiling examples") {
    const auto a = tile_patches(512, 384);
    CHECK(a.origins.size() == 12);
    CHECK(a.origins.back() == PatchOrigin{384, 256});

    const auto b = tile_patches(300, 200);
    const std::vector<PatchOrigin> expected{{0, 0}, {128, 0}, {172, 0}, {0, 72}, {128, 72}, {172, 72}};
    CHECK(b.origins == expected);

    const auto c = tile_patches(128, 128);
    CHECK(c.origins == std::vector<PatchOrigin>{{0, 0}});

    const auto small = tile_patches(100, 300);
    CHECK(small.patch_width == 100);
    CHECK(small.patch_height == 128);
    CHECK(small.origins.size() == 3);
}

TEST_CASE("tiling covers every pixel on a sample of sizes") {
    for (std::size_t w = 1; w <= 300; w += 13)
        for (std::size_t h = 1; h <= 300; h += 17) {
            CAPTURE(w);
            CAPTURE(h);
            const auto grid = tile_patches(w, h);
            const std::size_t cols = w <= 128 ? 1 : (w + 127) / 128;
            const std::size_t rows = h <= 128 ? 1 : (h + 127) / 128;
            CHECK(grid.origins.size() == cols * rows);
            CHECK(covers_every_pixel(w, h));
        }
}

TEST_CASE("golden files from the numpy reference") {
    const std::filesystem::path dir = std::filesystem::path(NOISEJECTOR_SOURCE_DIR) / "tests" / "golden";
    std::ifstream in(dir / "image_ops.json");
    REQUIRE(in.good());
    const auto doc = nlohmann::json::parse(in);

    for (const auto& entry : doc["images"]) {
        CAPTURE(entry["file"].get<std::string>());
        const Image img = read_png(dir / entry["file"].get<std::string>());
        CHECK(img.width == entry["width"].get<std::size_t>());
        CHECK(img.height == entry["height"].get<std::size_t>());
        CHECK(img.channels == entry["channels"].get<std::size_t>());
        CHECK(std::abs(blur_factor(img) - entry["blur"].get<double>()) <= 1e-9);
    }
    for (const auto& entry : doc["tilings"]) {
        const auto grid = tile_patches(entry["width"].get<std::size_t>(), entry["height"].get<std::size_t>());
        std::vector<PatchOrigin> expected;
        for (const auto& o : entry["origins"]) expected.push_back({o[0].get<std::size_t>(), o[1].get<std::size_t>()});
        CHECK(grid.origins == expected);
    }
}

TEST_CASE("png errors") {
    CHECK_THROWS_AS(read_png("/nonexistent/file.png"), Error);
}
