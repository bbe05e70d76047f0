#include "plangen/image_codec.hpp"

#include <limits>
#include <stdexcept>

namespace plangen {

Palette Palette::scene_default() {
    Palette p;
    auto push = [&p](const char* name, uint8_t r, uint8_t g, uint8_t b) {
        p.names.emplace_back(name);
        p.colors.push_back({r, g, b});
    };
    push("gray", 128, 128, 128);  // background
    push("red", 224, 34, 53);
    push("orange", 251, 132, 22);
    push("yellow", 225, 220, 38);
    push("green", 36, 177, 61);
    push("cyan", 36, 210, 230);
    push("blue", 42, 61, 223);
    push("purple", 140, 30, 217);
    push("magenta", 237, 50, 177);
    push("white", 255, 255, 255);
    push("black", 0, 0, 0);
    push("silver", 192, 192, 192);
    push("slate", 72, 72, 72);
    push("ivory", 238, 238, 214);
    push("navy", 20, 20, 80);
    push("olive", 100, 100, 30);
    return p;
}

int Palette::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown palette color: " + name);
}

int Palette::nearest(double r, double g, double b) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < colors.size(); ++i) {
        const double dr = r - colors[i].r;
        const double dg = g - colors[i].g;
        const double db = b - colors[i].b;
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

void Palette::validate() const {
    if (colors.empty()) throw std::invalid_argument("palette is empty");
    if (colors.size() != names.size())
        throw std::invalid_argument("palette names/colors size mismatch");
    for (size_t i = 0; i < colors.size(); ++i) {
        for (size_t j = i + 1; j < colors.size(); ++j) {
            if (colors[i] == colors[j])
                throw std::invalid_argument("palette colors must be pairwise distinct: " +
                                            names[i] + " == " + names[j]);
        }
    }
}

ImageTokens::ImageTokens(int g, int32_t fill) : grid(g) {
    if (g <= 0) throw std::invalid_argument("grid must be positive");
    cells.assign(static_cast<size_t>(g) * g, fill);
}

void ImageTokens::validate(int palette_size) const {
    if (grid <= 0 || cells.size() != static_cast<size_t>(grid) * grid)
        throw std::invalid_argument("token grid has the wrong length");
    for (const auto c : cells) {
        if (c < 0 || c >= palette_size)
            throw std::out_of_range("token index out of palette range: " + std::to_string(c));
    }
}

ImageTokens encode_image(const Image& image, const Palette& palette, int grid) {
    if (image.width != image.height)
        throw std::invalid_argument("encode_image expects a square image");
    if (grid <= 0 || image.width % grid != 0)
        throw std::invalid_argument("image size must be divisible by the token grid");
    const int cell = image.width / grid;
    ImageTokens toks(grid);
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            double sr = 0, sg = 0, sb = 0;
            for (int y = gy * cell; y < (gy + 1) * cell; ++y) {
                for (int x = gx * cell; x < (gx + 1) * cell; ++x) {
                    const Rgb c = image.get(x, y);
                    sr += c.r;
                    sg += c.g;
                    sb += c.b;
                }
            }
            const double n = static_cast<double>(cell) * cell;
            toks.at(gy, gx) = palette.nearest(sr / n, sg / n, sb / n);
        }
    }
    return toks;
}

Image decode_tokens(const ImageTokens& tokens, const Palette& palette, int image_size) {
    tokens.validate(static_cast<int>(palette.size()));
    if (image_size <= 0 || image_size % tokens.grid != 0)
        throw std::invalid_argument("image size must be divisible by the token grid");
    const int cell = image_size / tokens.grid;
    Image img(image_size, image_size);
    for (int gy = 0; gy < tokens.grid; ++gy) {
        for (int gx = 0; gx < tokens.grid; ++gx) {
            const Rgb c = palette.colors[tokens.at(gy, gx)];
            for (int y = gy * cell; y < (gy + 1) * cell; ++y) {
                for (int x = gx * cell; x < (gx + 1) * cell; ++x) img.set(x, y, c);
            }
        }
    }
    return img;
}

}  // namespace plangen
