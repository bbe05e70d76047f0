#include <doctest.h>

#include "plangen/layout.hpp"
#include "plangen/rng.hpp"
#include "plangen/tokens.hpp"
#include "plangen/vocab.hpp"

using namespace plangen;

TEST_CASE("special tokens encode atomically") {
    const Vocab v = Vocab::scene_default(NumericMode::TextDigits);
    for (const auto s : tok::kSpecials) {
        const auto ids = v.encode(s);
        REQUIRE(ids.size() == 1);
        CHECK(v.token(ids[0]) == s);
    }
    const auto ids = v.encode("<image_start>");
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == v.image_start);
}

TEST_CASE("numeric modes tokenize coordinates differently") {
    const Vocab n = Vocab::scene_default(NumericMode::TextDigits);
    const Vocab s = Vocab::scene_default(NumericMode::SpecialCoord);

    CHECK(n.encode("250").size() == 3);  // "2" "5" "0"

    const std::string boxed = "<box>[[250,0,750,1000]]</box>";
    const auto n_ids = n.encode(boxed);
    const auto s_ids = s.encode(boxed);
    // mode S holds each coordinate in one token
    int coord_tokens = 0;
    for (const auto id : s_ids) coord_tokens += s.is_coord_id(id);
    CHECK(coord_tokens == 4);
    CHECK(s_ids.size() < n_ids.size());
    CHECK(s.decode(s_ids) == boxed);
    CHECK(n.decode(n_ids) == boxed);
}

TEST_CASE("encode errors") {
    const Vocab v = Vocab::scene_default(NumericMode::TextDigits);
    CHECK_THROWS_WITH_AS(v.encode("a zeppelin"), "out-of-vocabulary word: zeppelin",
                         std::invalid_argument);
    CHECK_THROWS_AS(v.encode("caf\xc3\xa9"), std::invalid_argument);
    CHECK_THROWS_AS(v.decode(std::vector<int32_t>{1000000000}), std::out_of_range);
}

TEST_CASE("decode round-trips grammar-legal text") {
    for (const auto mode : {NumericMode::TextDigits, NumericMode::SpecialCoord}) {
        const Vocab v = Vocab::scene_default(mode);
        const std::string texts[] = {
            "a scene with a red circle and a blue square on a gray background",
            "a scene with a red circle, a blue square and a green triangle on a gray "
            "background",
            "<ref>a red circle</ref>",
            "describe the image and give the layout.",
            "<bos>a scene on a gray background<grounding><ref>a cyan "
            "square</ref><box>[[5,10,500,1000]]</box></grounding><image_start>",
            "<pad>",
            "",
        };
        for (const auto& t : texts) {
            CHECK(v.decode(v.encode(t)) == t);
        }
        CHECK(v.decode(std::vector<int32_t>{v.pad}) == "<pad>");
    }
}

TEST_CASE("serialized random layouts round-trip through the tokenizer") {
    Rng rng(5150);
    const Vocab n = Vocab::scene_default(NumericMode::TextDigits);
    const Vocab s = Vocab::scene_default(NumericMode::SpecialCoord);
    const char* colors[] = {"red", "blue", "green", "cyan"};
    const char* kinds[] = {"circle", "square", "triangle"};
    for (int i = 0; i < 200; ++i) {
        Layout layout;
        const int count = static_cast<int>(rng.next_range(1, 3));
        for (int e = 0; e < count; ++e) {
            BBox b;
            b.x0 = static_cast<int>(rng.next_range(0, 900));
            b.y0 = static_cast<int>(rng.next_range(0, 900));
            b.x1 = static_cast<int>(rng.next_range(b.x0 + 1, 1000));
            b.y1 = static_cast<int>(rng.next_range(b.y0 + 1, 1000));
            layout.elements.push_back(
                {std::string("a ") + colors[rng.next_below(4)] + " " + kinds[rng.next_below(3)],
                 {b}});
        }
        const std::string text = serialize_layout(layout);
        CHECK(n.decode(n.encode(text)) == text);
        CHECK(s.decode(s.encode(text)) == text);

        // mode S is strictly shorter whenever some coordinate has >= 2 digits
        bool multi_digit = false;
        for (const auto& el : layout.elements) {
            for (const auto& b : el.boxes) {
                multi_digit |= b.x0 > 9 || b.y0 > 9 || b.x1 > 9 || b.y1 > 9;
            }
        }
        if (multi_digit) CHECK(s.encode(text).size() < n.encode(text).size());
    }
}

TEST_CASE("vocab JSON persistence keeps ids and hash stable") {
    for (const auto mode : {NumericMode::TextDigits, NumericMode::SpecialCoord}) {
        const Vocab v = Vocab::scene_default(mode);
        const Vocab back = Vocab::from_json(v.to_json());
        CHECK(back.size() == v.size());
        CHECK(back.hash() == v.hash());
        CHECK(back.mode() == v.mode());
        CHECK(back.image_token(0) == v.image_token(0));
        CHECK(back.id("circle") == v.id("circle"));
        const std::string probe = "<ref>a red circle</ref><box>[[12,0,34,1000]]</box>";
        CHECK(back.encode(probe) == v.encode(probe));
    }
}

TEST_CASE("image token block") {
    const Vocab v = Vocab::scene_default(NumericMode::TextDigits);
    CHECK(v.palette_size() == 16);
    for (int k = 0; k < 16; ++k) {
        const auto id = v.image_token(k);
        CHECK(v.is_image_id(id));
        CHECK(v.image_index(id) == k);
        CHECK(!v.is_image_id(id + 16));
    }
    CHECK_THROWS_AS(v.image_token(16), std::out_of_range);
}
