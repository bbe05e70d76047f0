#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plangen/image.hpp"

namespace plangen {

// Fixed set of named RGB colors. Nearest-neighbor assignment breaks ties
// toward the lowest index.
struct Palette {
    std::vector<Rgb> colors;
    std::vector<std::string> names;

    // 16 entries: background gray first, then the eight colors scenes draw
    // with, white/black, and five filler tones. The scene colors are chosen so
    // that any cell averaging one of them with the background quantizes back
    // to one of the two, never to a third entry.
    static Palette scene_default();

    size_t size() const { return colors.size(); }
    int index_of(const std::string& name) const;  // throws on unknown name
    int nearest(double r, double g, double b) const;

    void validate() const;  // pairwise distinct colors, names match
};

// A G x G grid of palette indices in raster (row-major) order: the discrete
// image-token representation.
struct ImageTokens {
    int grid = 0;
    std::vector<int32_t> cells;

    ImageTokens() = default;
    ImageTokens(int g, int32_t fill = 0);

    int32_t at(int row, int col) const { return cells[static_cast<size_t>(row) * grid + col]; }
    int32_t& at(int row, int col) { return cells[static_cast<size_t>(row) * grid + col]; }

    bool operator==(const ImageTokens&) const = default;
    void validate(int palette_size) const;
};

// Per cell: mean RGB mapped to the nearest palette entry (Euclidean distance,
// ties toward the lowest index). The image side R must be divisible by G.
ImageTokens encode_image(const Image& image, const Palette& palette, int grid);

// Renders each cell as a flat color block in an R x R image; R divisible by
// the token grid. Throws on out-of-range indices.
Image decode_tokens(const ImageTokens& tokens, const Palette& palette, int image_size);

}  // namespace plangen
