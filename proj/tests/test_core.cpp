#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tati/core.hpp"
#include "tati/image_io.hpp"

using namespace tati;

TEST_CASE("classify_script maps the forced ranges", "[core]") {
    CHECK(classify_script(U'中') == ScriptClass::CJK);
    CHECK(classify_script(U'A') == ScriptClass::LATIN);
    CHECK(classify_script(U'z') == ScriptClass::LATIN);
    CHECK(classify_script(U' ') == ScriptClass::SPACE);
    CHECK(classify_script(U'\t') == ScriptClass::SPACE);
    CHECK(classify_script(U'7') == ScriptClass::DIGIT);
    CHECK(classify_script(U'한') == ScriptClass::HANGUL);
    CHECK(classify_script(U'ひ') == ScriptClass::KANA);
    CHECK(classify_script(U'カ') == ScriptClass::KANA);
    CHECK(classify_script(U'!') == ScriptClass::OTHER);
    CHECK(classify_script(0x0627) == ScriptClass::OTHER);  // Arabic alef
}

TEST_CASE("classify_script is total and deterministic", "[core]") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::uint32_t> dist(0, 0x10FFFF);
    for (int i = 0; i < 20000; ++i) {
        const char32_t cp = dist(rng);
        const ScriptClass a = classify_script(cp);
        const ScriptClass b = classify_script(cp);
        CHECK(a == b);
        CHECK(std::string(to_string(a)) != "");
    }
}

TEST_CASE("weighted_length matches the display-width rule", "[core]") {
    CHECK(weighted_length("") == 0.0);
    CHECK(weighted_length("你好") == 5.0);
    CHECK(weighted_length("HELLO") == 5.0);
    CHECK(weighted_length("a b") == 2.5);
    CHECK(weighted_length("카나다") == 7.5);
}

TEST_CASE("weighted_length is additive and monotone", "[core]") {
    std::mt19937 rng(11);
    auto random_text = [&](int maxlen) {
        std::uniform_int_distribution<int> len(0, maxlen);
        std::uniform_int_distribution<std::uint32_t> pick(0, 5);
        std::uniform_int_distribution<std::uint32_t> ascii(0x20, 0x7E);
        std::uniform_int_distribution<std::uint32_t> cjk(0x4E00, 0x9FFF);
        std::uniform_int_distribution<std::uint32_t> hangul(0xAC00, 0xD7A3);
        std::string out;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            switch (pick(rng)) {
                case 0: append_utf8(out, cjk(rng)); break;
                case 1: append_utf8(out, hangul(rng)); break;
                default: append_utf8(out, ascii(rng)); break;
            }
        }
        return out;
    };
    for (int i = 0; i < 500; ++i) {
        const std::string a = random_text(20);
        const std::string b = random_text(20);
        CHECK(weighted_length(a + b) ==
              Catch::Approx(weighted_length(a) + weighted_length(b))
                  .epsilon(1e-12));
        std::string c = a;
        append_utf8(c, U'x');
        CHECK(weighted_length(c) >= weighted_length(a));
    }
}

TEST_CASE("box_frame of simple rectangles", "[core]") {
    const TextBox box = TextBox::axis_aligned(0, 0, 10, 2);
    const BoxFrame f = box_frame(box);
    CHECK(f.center.x == Catch::Approx(5.0));
    CHECK(f.center.y == Catch::Approx(1.0));
    CHECK(f.len_u == Catch::Approx(10.0));
    CHECK(f.len_v == Catch::Approx(2.0));
    CHECK(f.u_axis.x == Catch::Approx(1.0));
    CHECK(f.u_axis.y == Catch::Approx(0.0));

    const TextBox unit = TextBox::axis_aligned(0, 0, 1, 1);
    const BoxFrame uf = box_frame(unit);
    CHECK(uf.center.x == Catch::Approx(0.5));
    CHECK(uf.center.y == Catch::Approx(0.5));
    CHECK(uf.len_u == Catch::Approx(1.0));
    CHECK(uf.len_v == Catch::Approx(1.0));
}

TEST_CASE("box_frame rejects degenerate quads", "[core]") {
    const TextBox collinear{{Vec2{0, 0}, Vec2{1, 0}, Vec2{2, 0}, Vec2{3, 0}}};
    CHECK_THROWS_AS(box_frame(collinear), DegenerateBox);
    const TextBox zero_edge{{Vec2{0, 0}, Vec2{0, 0}, Vec2{1, 1}, Vec2{0, 1}}};
    CHECK_THROWS_AS(box_frame(zero_edge), DegenerateBox);
}

TEST_CASE("frame round trip is identity for axis-aligned rectangles", "[core]") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> coord(0.0, 500.0);
    std::uniform_real_distribution<double> size(0.5, 80.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = coord(rng), y = coord(rng);
        const double w = size(rng), h = size(rng);
        const TextBox box = TextBox::axis_aligned(x, y, x + w, y + h);
        const TextBox back = box_from_frame(box_frame(box));
        for (int c = 0; c < 4; ++c) {
            CHECK(back.corners[c].x == Catch::Approx(box.corners[c].x).margin(1e-9));
            CHECK(back.corners[c].y == Catch::Approx(box.corners[c].y).margin(1e-9));
        }
    }
}

TEST_CASE("from_points normalizes detector corner order", "[core]") {
    // Same rectangle handed over in a rotated and a counter-clockwise order.
    const TextBox expect = TextBox::axis_aligned(2, 3, 12, 6);
    const TextBox rotated = TextBox::from_points(
        {Vec2{12, 3}, Vec2{12, 6}, Vec2{2, 6}, Vec2{2, 3}});
    const TextBox ccw = TextBox::from_points(
        {Vec2{2, 3}, Vec2{2, 6}, Vec2{12, 6}, Vec2{12, 3}});
    for (int c = 0; c < 4; ++c) {
        CHECK(rotated.corners[c].x == Catch::Approx(expect.corners[c].x));
        CHECK(rotated.corners[c].y == Catch::Approx(expect.corners[c].y));
        CHECK(ccw.corners[c].x == Catch::Approx(expect.corners[c].x));
        CHECK(ccw.corners[c].y == Catch::Approx(expect.corners[c].y));
    }
}

TEST_CASE("PNG encode/decode round trip preserves pixels", "[core]") {
    std::mt19937 rng(5);
    ImageDoc img = ImageDoc::filled(31, 17, {10, 20, 30});
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
    const auto bytes = encode_png(img);
    const ImageDoc back = decode_image(bytes);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(back.pixels == img.pixels);

    const ImageDoc via_b64 = image_from_b64(image_to_b64(img));
    CHECK(via_b64.pixels == img.pixels);
}

TEST_CASE("PNG encoding is byte-stable", "[core]") {
    ImageDoc img = ImageDoc::filled(64, 48, {200, 180, 90});
    for (int y = 10; y < 20; ++y)
        for (int x = 5; x < 40; ++x) img.at(x, y)[0] = 13;
    CHECK(encode_png(img) == encode_png(img));
}
