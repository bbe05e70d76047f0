#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plangen {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// Dense 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // 3 bytes per pixel

    Image() = default;
    Image(int w, int h, Rgb fill = {0, 0, 0});

    Rgb get(int x, int y) const {
        const size_t o = 3 * (static_cast<size_t>(y) * width + x);
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }
    void set(int x, int y, Rgb c) {
        const size_t o = 3 * (static_cast<size_t>(y) * width + x);
        pixels[o] = c.r;
        pixels[o + 1] = c.g;
        pixels[o + 2] = c.b;
    }

    bool operator==(const Image&) const = default;
};

// Binary PPM (P6), 8-bit.
void write_ppm(const Image& image, const std::string& path);
Image read_ppm(const std::string& path);

// 8-bit RGB PNG via zlib. The reader handles the subset our writer and
// standard tools emit for such images (color type 2, bit depth 8).
void write_png(const Image& image, const std::string& path);
Image read_png(const std::string& path);

// Dispatches on the file extension (.png / .ppm).
void write_image(const Image& image, const std::string& path);
Image read_image(const std::string& path);

}  // namespace plangen
