#include <doctest.h>

#include <chrono>

#include "plangen/layout.hpp"
#include "plangen/rng.hpp"

using namespace plangen;

namespace {

Layout random_layout(Rng& rng) {
    static const char* words[] = {"red", "blue", "circle", "square", "cat", "dog", "tree"};
    Layout layout;
    const int n = static_cast<int>(rng.next_range(0, 4));
    for (int i = 0; i < n; ++i) {
        LayoutElement el;
        const int w = static_cast<int>(rng.next_range(1, 3));
        for (int k = 0; k < w; ++k) {
            if (k) el.caption += " ";
            el.caption += words[rng.next_below(7)];
        }
        const int boxes = static_cast<int>(rng.next_range(1, 3));
        for (int b = 0; b < boxes; ++b) {
            BBox box;
            box.x0 = static_cast<int>(rng.next_range(0, 998));
            box.y0 = static_cast<int>(rng.next_range(0, 998));
            box.x1 = static_cast<int>(rng.next_range(box.x0 + 1, 1000));
            box.y1 = static_cast<int>(rng.next_range(box.y0 + 1, 1000));
            el.boxes.push_back(box);
        }
        layout.elements.push_back(std::move(el));
    }
    return layout;
}

}  // namespace

TEST_CASE("serialize_layout emits the pinned syntax") {
    Layout layout;
    layout.elements.push_back({"a red circle", {{100, 200, 300, 400}}});
    CHECK(serialize_layout(layout) ==
          "<ref>a red circle</ref><box>[[100,200,300,400]]</box>");
    CHECK(serialize_layout(Layout{}) == "");

    Layout multi;
    multi.elements.push_back({"a", {{0, 0, 500, 500}, {500, 500, 1000, 1000}}});
    CHECK(serialize_layout(multi) ==
          "<ref>a</ref><box>[[0,0,500,500],[500,500,1000,1000]]</box>");
}

TEST_CASE("serialize_layout rejects reserved tokens in captions") {
    Layout layout;
    layout.elements.push_back({"a <box> trap", {{0, 0, 10, 10}}});
    CHECK_THROWS_AS(serialize_layout(layout), std::invalid_argument);
}

TEST_CASE("parse_layout recovers elements") {
    const auto r = parse_layout("<ref>a blue square</ref><box>[[0,0,500,500]]</box>");
    REQUIRE(r.ok());
    REQUIRE(r.value().size() == 1);
    CHECK(r.value().elements[0].caption == "a blue square");
    CHECK(r.value().elements[0].boxes[0] == BBox{0, 0, 500, 500});

    const auto multi =
        parse_layout("<ref>a</ref><box>[[0,0,500,500],[500,500,1000,1000]]</box>");
    REQUIRE(multi.ok());
    CHECK(multi.value().elements[0].boxes.size() == 2);

    const auto spaced = parse_layout("  <ref>x</ref><box>[[1,2,3,4]]</box>\n");
    REQUIRE(spaced.ok());
    CHECK(spaced.value().size() == 1);

    const auto empty = parse_layout("   ");
    REQUIRE(empty.ok());
    CHECK(empty.value().empty());
}

TEST_CASE("parse_layout reports distinct error kinds with offsets") {
    const auto oob = parse_layout("<ref>a</ref><box>[[0,0,1200,500]]</box>");
    REQUIRE(!oob.ok());
    CHECK(oob.error().kind == ParseErrorKind::CoordOutOfRange);
    CHECK(oob.error().offset == 23);  // start of "1200"

    const auto inverted = parse_layout("<ref>a</ref><box>[[500,0,100,500]]</box>");
    REQUIRE(!inverted.ok());
    CHECK(inverted.error().kind == ParseErrorKind::InvertedBox);
    CHECK(inverted.error().message == "x0 >= x1");

    const auto unbalanced = parse_layout("<ref>a<box>[[0,0,1,1]]</box>");
    REQUIRE(!unbalanced.ok());
    CHECK(unbalanced.error().kind == ParseErrorKind::UnbalancedRef);

    const auto no_box_end = parse_layout("<ref>a</ref><box>[[0,0,1,1]]");
    REQUIRE(!no_box_end.ok());
    CHECK(no_box_end.error().kind == ParseErrorKind::UnbalancedBox);

    const auto bad_list = parse_layout("<ref>a</ref><box>[[0,0,1]]</box>");
    REQUIRE(!bad_list.ok());
    CHECK(bad_list.error().kind == ParseErrorKind::BadBoxList);

    const auto trailing = parse_layout("<ref>a</ref><box>[[0,0,1,1]]</box> junk");
    REQUIRE(!trailing.ok());
    CHECK(trailing.error().kind == ParseErrorKind::TrailingText);
}

TEST_CASE("round-trip identity over 1000 randomized layouts") {
    Rng rng(20240901);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 1000; ++i) {
        const Layout layout = random_layout(rng);
        const auto back = parse_layout(serialize_layout(layout));
        REQUIRE(back.ok());
        CHECK(back.value() == layout);
    }
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    CHECK(std::chrono::duration<double>(elapsed).count() < 1.0);
}

TEST_CASE("layout JSON record round-trips") {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        const Layout layout = random_layout(rng);
        const auto [caption, back] =
            layout_record_from_json(layout_record_to_json("a test scene", layout));
        CHECK(caption == "a test scene");
        CHECK(back == layout);
    }
}
