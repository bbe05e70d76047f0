#include <doctest.h>

#include <cstdio>
#include <stdexcept>
#include <string>

#include "plangen/image.hpp"
#include "plangen/image_codec.hpp"
#include "plangen/rng.hpp"

using namespace plangen;

TEST_CASE("constant image maps every cell to the same palette index") {
    const Palette pal = Palette::scene_default();
    const int red = pal.index_of("red");
    const Image img(128, 128, pal.colors[red]);
    const ImageTokens toks = encode_image(img, pal, 16);
    for (const auto c : toks.cells) CHECK(c == red);
}

TEST_CASE("mixed cell quantizes to the nearest mean") {
    // half pure red, half pure blue; the mean lands on purple exactly
    Palette pal;
    pal.names = {"red", "blue", "purple"};
    pal.colors = {{255, 0, 0}, {0, 0, 255}, {128, 0, 128}};
    Image img(8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) img.set(x, y, y < 4 ? Rgb{255, 0, 0} : Rgb{0, 0, 255});
    }
    const ImageTokens toks = encode_image(img, pal, 1);
    CHECK(toks.cells[0] == 2);
}

TEST_CASE("nearest-neighbor ties break toward the lowest index") {
    Palette pal;
    pal.names = {"low", "high"};
    pal.colors = {{100, 100, 100}, {200, 200, 200}};
    CHECK(pal.nearest(150, 150, 150) == 0);
}

TEST_CASE("decode renders flat blocks and inverts encode") {
    const Palette pal = Palette::scene_default();
    const int n = static_cast<int>(pal.size());

    ImageTokens zero(16);
    const Image img0 = decode_tokens(zero, pal, 128);
    CHECK(img0.get(0, 0) == pal.colors[0]);
    CHECK(img0.get(127, 127) == pal.colors[0]);

    ImageTokens checker(16);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) checker.at(r, c) = (r + c) % 2;
    }
    const Image imgc = decode_tokens(checker, pal, 128);
    CHECK(imgc.get(0, 0) == pal.colors[0]);
    CHECK(imgc.get(8, 0) == pal.colors[1]);
    CHECK(encode_image(imgc, pal, 16) == checker);

    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        ImageTokens toks(16);
        for (auto& c : toks.cells) c = static_cast<int32_t>(rng.next_below(n));
        CHECK(encode_image(decode_tokens(toks, pal, 128), pal, 16) == toks);
    }
}

TEST_CASE("cell-granular translation covariance") {
    const Palette pal = Palette::scene_default();
    Rng rng(23);
    Image img(128, 128, pal.colors[0]);
    // paint some random 8x8-aligned blocks
    for (int i = 0; i < 20; ++i) {
        const int gx = static_cast<int>(rng.next_below(16));
        const int gy = static_cast<int>(rng.next_below(16));
        const Rgb c = pal.colors[rng.next_below(pal.size())];
        for (int y = gy * 8; y < gy * 8 + 8; ++y) {
            for (int x = gx * 8; x < gx * 8 + 8; ++x) img.set(x, y, c);
        }
    }
    Image shifted(128, 128, pal.colors[0]);
    for (int y = 0; y < 128; ++y) {
        for (int x = 8; x < 128; ++x) shifted.set(x, y, img.get(x - 8, y));
    }
    const ImageTokens a = encode_image(img, pal, 16);
    const ImageTokens b = encode_image(shifted, pal, 16);
    for (int r = 0; r < 16; ++r) {
        for (int c = 1; c < 16; ++c) CHECK(b.at(r, c) == a.at(r, c - 1));
    }
}

TEST_CASE("encode/decode argument validation") {
    const Palette pal = Palette::scene_default();
    const Image img(120, 120, pal.colors[0]);
    CHECK_THROWS_AS(encode_image(img, pal, 16), std::invalid_argument);  // 120 % 16 != 0

    ImageTokens bad(4);
    bad.cells[0] = 99;
    CHECK_THROWS_AS(decode_tokens(bad, pal, 64), std::out_of_range);
}

TEST_CASE("default palette is valid and keeps scene-color mixing lines safe") {
    const Palette pal = Palette::scene_default();
    pal.validate();
    REQUIRE(pal.size() == 16);
    CHECK(pal.names[0] == "gray");

    // A cell holding a blend of one scene color and the background must
    // quantize to one of the two, never to a third entry.
    const int bg = pal.index_of("gray");
    for (const char* name : {"red", "orange", "yellow", "green", "cyan", "blue", "purple",
                             "magenta"}) {
        const int ci = pal.index_of(name);
        const Rgb c = pal.colors[ci];
        const Rgb g = pal.colors[bg];
        for (int k = 0; k <= 64; ++k) {
            const double t = k / 64.0;
            const int got = pal.nearest(t * c.r + (1 - t) * g.r, t * c.g + (1 - t) * g.g,
                                        t * c.b + (1 - t) * g.b);
            const bool ok = got == ci || got == bg;
            CHECK(ok);
        }
    }
}

TEST_CASE("ppm and png round-trip") {
    const Palette pal = Palette::scene_default();
    Rng rng(31);
    Image img(64, 48);
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) img.set(x, y, pal.colors[rng.next_below(pal.size())]);
    }
    const std::string ppm = "/tmp/plangen_test_img.ppm";
    const std::string png = "/tmp/plangen_test_img.png";
    write_ppm(img, ppm);
    CHECK(read_ppm(ppm) == img);
    write_png(img, png);
    CHECK(read_png(png) == img);
    std::remove(ppm.c_str());
    std::remove(png.c_str());
}
