#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tati/errors.hpp"
#include "tati/geometry.hpp"
#include "tati/util.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// ImageDoc: row-major RGB8 raster. Alpha is discarded on load; fusion and the
// fallback renderer only need opaque color.
// ---------------------------------------------------------------------------

struct ImageDoc {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3, row-major RGB
    std::string source_path;           // empty when synthesized in memory

    static ImageDoc filled(int w, int h, std::array<std::uint8_t, 3> rgb) {
        ImageDoc img;
        img.width = w;
        img.height = h;
        img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
        for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
            img.pixels[i] = rgb[0];
            img.pixels[i + 1] = rgb[1];
            img.pixels[i + 2] = rgb[2];
        }
        return img;
    }

    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == static_cast<std::size_t>(width) * height * 3;
    }

    std::uint8_t* at(int x, int y) {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    // Stable content identifier used to key scripted mock OCR answers.
    std::string pixel_key() const {
        std::uint64_t h = fnv1a64(&width, sizeof width);
        h = fnv1a64(&height, sizeof height, h);
        h = fnv1a64(pixels.data(), pixels.size(), h);
        return "px:" + to_hex(h);
    }
};

// ---------------------------------------------------------------------------
// TextBox: oriented quadrilateral, corners clockwise starting at the top-left
// of the reading direction.
// ---------------------------------------------------------------------------

struct BoxFrame {
    Vec2 center;
    Vec2 u_axis;   // unit vector along reading direction
    Vec2 v_axis;   // unit vector across lines
    double len_u = 0.0;
    double len_v = 0.0;
};

struct TextBox {
    std::array<Vec2, 4> corners{};

    static TextBox axis_aligned(double x0, double y0, double x1, double y1) {
        return TextBox{{Vec2{x0, y0}, Vec2{x1, y0}, Vec2{x1, y1}, Vec2{x0, y1}}};
    }

    // Normalizes raw detector output: enforce clockwise orientation (y-down),
    // put the longest edge on the reading axis, and start reading left-to-right
    // (top-to-bottom for vertical boxes). OCR backends disagree on corner
    // order, so ingestion funnels through here.
    static TextBox from_points(std::array<Vec2, 4> pts) {
        Polygon poly(pts.begin(), pts.end());
        if (signed_area(poly) < 0.0) std::swap(pts[1], pts[3]);
        auto rotate1 = [&pts] {
            const Vec2 t = pts[0];
            pts[0] = pts[1];
            pts[1] = pts[2];
            pts[2] = pts[3];
            pts[3] = t;
        };
        if (norm(pts[1] - pts[0]) < norm(pts[3] - pts[0])) rotate1();
        const Vec2 u = pts[1] - pts[0];
        const bool horizontal = std::abs(u.x) >= std::abs(u.y);
        if ((horizontal && u.x < 0.0) || (!horizontal && u.y < 0.0)) {
            rotate1();
            rotate1();
        }
        return TextBox{pts};
    }

    Polygon polygon() const { return Polygon(corners.begin(), corners.end()); }
    bool operator==(const TextBox&) const = default;
};

// Frame of reference of a box. Throws DegenerateBox when the quad has no
// area or a zero-length edge.
inline BoxFrame box_frame(const TextBox& box) {
    const auto& c = box.corners;
    const double area = polygon_area(box.polygon());
    const double lu = norm(c[1] - c[0]);
    const double lv = norm(c[3] - c[0]);
    for (int i = 0; i < 4; ++i) {
        if (norm(c[(i + 1) % 4] - c[i]) <= 0.0)
            throw DegenerateBox("text box has a zero-length edge");
    }
    if (area <= 0.0) throw DegenerateBox("text box has zero area");
    BoxFrame f;
    f.center = (c[0] + c[1] + c[2] + c[3]) * 0.25;
    f.u_axis = normalized(c[1] - c[0]);
    f.v_axis = normalized(c[3] - c[0]);
    f.len_u = lu;
    f.len_v = lv;
    return f;
}

// Inverse of box_frame for rectangular frames; exact for axis-aligned boxes.
inline TextBox box_from_frame(const BoxFrame& f) {
    const Vec2 hu = f.u_axis * (f.len_u * 0.5);
    const Vec2 hv = f.v_axis * (f.len_v * 0.5);
    return TextBox{{f.center - hu - hv, f.center + hu - hv, f.center + hu + hv,
                    f.center - hu + hv}};
}

// ---------------------------------------------------------------------------
// RecognizedLine
// ---------------------------------------------------------------------------

struct RecognizedLine {
    TextBox box;
    std::string text;        // nonempty after trim
    double confidence = 1.0; // in [0, 1]
    int order = 0;           // reading-order index, permutation of 0..n-1
};

// ---------------------------------------------------------------------------
// Script classification and display-width weighting
// ---------------------------------------------------------------------------

enum class ScriptClass { CJK, LATIN, HANGUL, KANA, DIGIT, SPACE, OTHER };

inline const char* to_string(ScriptClass s) {
    switch (s) {
        case ScriptClass::CJK: return "cjk";
        case ScriptClass::LATIN: return "latin";
        case ScriptClass::HANGUL: return "hangul";
        case ScriptClass::KANA: return "kana";
        case ScriptClass::DIGIT: return "digit";
        case ScriptClass::SPACE: return "space";
        case ScriptClass::OTHER: return "other";
    }
    return "other";
}

inline std::optional<ScriptClass> script_from_string(std::string_view s) {
    if (s == "cjk") return ScriptClass::CJK;
    if (s == "latin") return ScriptClass::LATIN;
    if (s == "hangul") return ScriptClass::HANGUL;
    if (s == "kana") return ScriptClass::KANA;
    if (s == "digit") return ScriptClass::DIGIT;
    if (s == "space") return ScriptClass::SPACE;
    if (s == "other") return ScriptClass::OTHER;
    return std::nullopt;
}

// Total over all scalar values; every scalar maps to exactly one class.
inline ScriptClass classify_script(char32_t ch) {
    // Whitespace first: ASCII controls plus the common Unicode space family.
    if (ch == U' ' || ch == U'\t' || ch == U'\n' || ch == U'\r' ||
        ch == U'\f' || ch == U'\v' || ch == 0x00A0 || ch == 0x3000 ||
        (ch >= 0x2000 && ch <= 0x200A) || ch == 0x2028 || ch == 0x2029 ||
        ch == 0x202F || ch == 0x205F)
        return ScriptClass::SPACE;
    if (ch >= U'0' && ch <= U'9') return ScriptClass::DIGIT;
    if ((ch >= U'A' && ch <= U'Z') || (ch >= U'a' && ch <= U'z'))
        return ScriptClass::LATIN;
    // Latin-1 supplement letters and Latin Extended-A/B.
    if ((ch >= 0x00C0 && ch <= 0x024F) && ch != 0x00D7 && ch != 0x00F7)
        return ScriptClass::LATIN;
    // Hiragana, katakana, phonetic extensions, halfwidth katakana.
    if ((ch >= 0x3040 && ch <= 0x30FF) || (ch >= 0x31F0 && ch <= 0x31FF) ||
        (ch >= 0xFF66 && ch <= 0xFF9F))
        return ScriptClass::KANA;
    // Hangul syllables and jamo blocks.
    if ((ch >= 0xAC00 && ch <= 0xD7A3) || (ch >= 0x1100 && ch <= 0x11FF) ||
        (ch >= 0x3130 && ch <= 0x318F) || (ch >= 0xA960 && ch <= 0xA97F) ||
        (ch >= 0xD7B0 && ch <= 0xD7FF))
        return ScriptClass::HANGUL;
    // CJK unified ideographs: URO, extension A, compatibility block, and the
    // supplementary-plane extensions.
    if ((ch >= 0x4E00 && ch <= 0x9FFF) || (ch >= 0x3400 && ch <= 0x4DBF) ||
        (ch >= 0xF900 && ch <= 0xFAFF) || (ch >= 0x20000 && ch <= 0x3134F))
        return ScriptClass::CJK;
    return ScriptClass::OTHER;
}

// Display-width units per script. A CJK character counts 2.5x a Latin letter;
// the same factor is reused for Hangul and kana since they are also rendered
// full-width.
struct WeightTable {
    std::map<ScriptClass, double> units = {
        {ScriptClass::LATIN, 1.0}, {ScriptClass::DIGIT, 1.0},
        {ScriptClass::SPACE, 0.5}, {ScriptClass::CJK, 2.5},
        {ScriptClass::HANGUL, 2.5}, {ScriptClass::KANA, 2.5},
        {ScriptClass::OTHER, 1.0},
    };

    double weight(ScriptClass s) const {
        const auto it = units.find(s);
        return it != units.end() ? it->second : 1.0;
    }
    double weight(char32_t ch) const { return weight(classify_script(ch)); }
};

inline double weighted_length(std::string_view text,
                              const WeightTable& weights = {}) {
    double sum = 0.0;
    std::size_t pos = 0;
    while (pos < text.size()) sum += weights.weight(next_scalar(text, pos));
    return sum;
}

}  // namespace tati
