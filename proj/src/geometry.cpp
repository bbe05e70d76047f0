#include "plangen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace plangen {

void BBox::validate() const {
    if (x0 < 0) throw std::invalid_argument("x0 < 0");
    if (y0 < 0) throw std::invalid_argument("y0 < 0");
    if (x1 > 1000) throw std::invalid_argument("x1 > 1000");
    if (y1 > 1000) throw std::invalid_argument("y1 > 1000");
    if (x0 >= x1) throw std::invalid_argument("x0 >= x1");
    if (y0 >= y1) throw std::invalid_argument("y0 >= y1");
}

std::string BBox::to_string() const {
    std::ostringstream os;
    os << "[" << x0 << "," << y0 << "," << x1 << "," << y1 << "]";
    return os.str();
}

namespace {

int round_scale(double coord, double extent) {
    // round-half-away-from-zero, then clamp to the normalized range
    const long long v = std::llround(coord / extent * 1000.0);
    return static_cast<int>(std::clamp(v, 0ll, 1000ll));
}

// Widens a zero-width interval by one unit toward whichever side has room.
void widen(int& lo, int& hi) {
    if (lo != hi) return;
    if (hi < 1000) {
        hi += 1;
    } else {
        lo -= 1;
    }
}

}  // namespace

BBox normalize_bbox(double px_x0, double px_y0, double px_x1, double px_y1, int width,
                    int height) {
    if (width <= 0) throw std::invalid_argument("width <= 0");
    if (height <= 0) throw std::invalid_argument("height <= 0");
    if (px_x0 < 0) throw std::invalid_argument("x0 < 0");
    if (px_y0 < 0) throw std::invalid_argument("y0 < 0");
    if (px_x1 > width) throw std::invalid_argument("x1 > width");
    if (px_y1 > height) throw std::invalid_argument("y1 > height");
    if (px_x0 >= px_x1) throw std::invalid_argument("x0 >= x1");
    if (px_y0 >= px_y1) throw std::invalid_argument("y0 >= y1");

    BBox b;
    b.x0 = round_scale(px_x0, width);
    b.x1 = round_scale(px_x1, width);
    b.y0 = round_scale(px_y0, height);
    b.y1 = round_scale(px_y1, height);
    widen(b.x0, b.x1);
    widen(b.y0, b.y1);
    return b;
}

double iou(const BBox& a, const BBox& b) {
    const long long iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const long long ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const long long inter = iw * ih;
    if (inter == 0) return 0.0;
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace plangen
