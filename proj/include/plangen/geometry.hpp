#pragma once

#include <cstdint>
#include <string>

namespace plangen {

// Axis-aligned box in normalized units. Coordinates are integers in [0, 1000]
// per axis; the box covers the half-open real region [x0,x1) x [y0,y1), so
// boxes that tile an image partition its area exactly.
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool operator==(const BBox&) const = default;

    bool valid() const {
        return 0 <= x0 && x0 < x1 && x1 <= 1000 && 0 <= y0 && y0 < y1 && y1 <= 1000;
    }
    long long area() const { return static_cast<long long>(x1 - x0) * (y1 - y0); }

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    std::string to_string() const;
};

// Maps a pixel-space box to normalized units by round(coord / extent * 1000)
// with round-half-away-from-zero, clamped to [0, 1000]. A box that rounds to
// zero width/height is widened by one unit toward the in-range side.
// Throws std::invalid_argument on an inverted or out-of-range pixel box.
BBox normalize_bbox(double px_x0, double px_y0, double px_x1, double px_y1, int width,
                    int height);

// Intersection over union of the half-open real boxes, in [0, 1].
double iou(const BBox& a, const BBox& b);

}  // namespace plangen
