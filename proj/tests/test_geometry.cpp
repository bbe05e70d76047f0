#include <doctest.h>

#include <stdexcept>

#include "plangen/geometry.hpp"
#include "plangen/rng.hpp"

using namespace plangen;

namespace {

// Independent pixel-count oracle: rasterize both boxes on the 1000x1000
// integer grid and count cells.
double iou_rasterized(const BBox& a, const BBox& b) {
    long long inter = 0, uni = 0;
    for (int y = 0; y < 1000; ++y) {
        for (int x = 0; x < 1000; ++x) {
            const bool in_a = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
            const bool in_b = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

BBox random_box(Rng& rng) {
    BBox b;
    b.x0 = static_cast<int>(rng.next_range(0, 998));
    b.y0 = static_cast<int>(rng.next_range(0, 998));
    b.x1 = static_cast<int>(rng.next_range(b.x0 + 1, 1000));
    b.y1 = static_cast<int>(rng.next_range(b.y0 + 1, 1000));
    return b;
}

}  // namespace

TEST_CASE("normalize_bbox maps pixel boxes to 0-1000") {
    CHECK(normalize_bbox(96, 96, 288, 288, 384, 384) == BBox{250, 250, 750, 750});
    CHECK(normalize_bbox(0, 0, 384, 384, 384, 384) == BBox{0, 0, 1000, 1000});
    CHECK_THROWS_WITH_AS(normalize_bbox(100, 50, 50, 80, 384, 384), "x0 >= x1",
                         std::invalid_argument);
    CHECK_THROWS_AS(normalize_bbox(0, 0, 400, 200, 384, 384), std::invalid_argument);
    CHECK_THROWS_AS(normalize_bbox(-1, 0, 10, 10, 384, 384), std::invalid_argument);
}

TEST_CASE("normalize_bbox widens degenerate boxes") {
    // one-pixel box at 4096 resolution rounds to a zero-width interval
    const BBox b = normalize_bbox(2048, 2048, 2049, 2049, 4096, 4096);
    CHECK(b.x1 - b.x0 == 1);
    CHECK(b.y1 - b.y0 == 1);
    CHECK(b.valid());

    // at the far edge the widening must go inward
    const BBox e = normalize_bbox(4095, 4095, 4096, 4096, 4096, 4096);
    CHECK(e.x1 == 1000);
    CHECK(e.x0 == 999);
    CHECK(e.valid());
}

TEST_CASE("iou basics") {
    const BBox a{0, 0, 500, 500};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, BBox{500, 500, 900, 900}) == 0.0);
    CHECK(iou(a, BBox{250, 250, 750, 750}) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("iou matches the rasterized oracle on random boxes") {
    Rng rng(42);
    for (int i = 0; i < 20; ++i) {
        const BBox a = random_box(rng);
        const BBox b = random_box(rng);
        CHECK(iou(a, b) == doctest::Approx(iou_rasterized(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("iou symmetry, identity and translation monotonicity") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const BBox a = random_box(rng);
        const BBox b = random_box(rng);
        CHECK(iou(a, b) == iou(b, a));
        CHECK((iou(a, b) == 1.0) == (a == b));
    }

    // sliding a copy to the right never increases the overlap
    const BBox base{100, 100, 400, 400};
    double prev = 1.0;
    for (int shift = 0; shift <= 600; shift += 20) {
        BBox moved = base;
        moved.x0 += shift;
        moved.x1 += shift;
        const double v = iou(base, moved);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}
