#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tati/core.hpp"
#include "tati/font_data.hpp"

namespace tati {

// Deterministic glyph source for the fallback rasterizer. Printable ASCII
// comes from the embedded DejaVu Sans Mono atlas; every other non-space
// scalar renders as a deterministic placeholder glyph synthesized from the
// codepoint, sized by its script weight (a CJK cell is 2.5x a Latin cell).
// Placeholder glyphs keep the renderer fully self-contained — shipping a
// real CJK font would add tens of megabytes — and the deterministic shape
// still exercises every geometric contract. The diffusion backend is the
// route for faithful non-Latin strokes.

struct GlyphBitmap {
    int width = 0;                       // pixels at base scale
    int height = fontdata::kCellHeight;  // always 16 at base scale
    std::uint32_t rows[16] = {};

    bool bit(int x, int y) const {
        if (x < 0 || y < 0 || x >= width || y >= height) return false;
        return (rows[y] >> (31 - x)) & 1u;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D649BB133111EBULL;
    return x ^ (x >> 31);
}

// Bordered, horizontally symmetric ink pattern seeded by the codepoint.
inline GlyphBitmap placeholder_glyph(char32_t cp, int width) {
    GlyphBitmap g;
    g.width = width;
    const int half = (width - 2) / 2;
    for (int y = 2; y <= 13; ++y) {
        std::uint32_t row = 0;
        const std::uint64_t h = splitmix64(
            (static_cast<std::uint64_t>(cp) << 8) ^ static_cast<std::uint64_t>(y));
        for (int x = 1; x < 1 + half; ++x) {
            const bool on = (y == 2 || y == 13 || x == 1) ||
                            ((h >> (x % 48)) & 1u);
            if (on) {
                row |= 1u << (31 - x);
                row |= 1u << (31 - (width - 1 - x));  // mirror
            }
        }
        g.rows[y] = row;
    }
    return g;
}

}  // namespace detail

inline GlyphBitmap glyph_for(char32_t cp, const WeightTable& weights = {}) {
    const ScriptClass script = classify_script(cp);
    if (script == ScriptClass::SPACE) {
        GlyphBitmap g;
        g.width = std::max(
            2, static_cast<int>(std::lround(8.0 * weights.weight(script))));
        return g;
    }
    if (cp >= fontdata::kFirstChar && cp <= fontdata::kLastChar) {
        GlyphBitmap g;
        g.width = fontdata::kCellWidth;
        const auto& cell = fontdata::kAsciiGlyphs[cp - fontdata::kFirstChar];
        for (int y = 0; y < fontdata::kCellHeight; ++y)
            g.rows[y] = static_cast<std::uint32_t>(cell[y]) << 24;
        return g;
    }
    const int width = std::clamp(
        static_cast<int>(std::lround(8.0 * weights.weight(script))), 4, 24);
    return detail::placeholder_glyph(cp, width);
}

// One line of text laid out in weighted units. `start_units` positions each
// glyph so that sampling by unit offset is a binary search away.
struct ShapedLine {
    struct Placed {
        double start_units;
        double units;
        GlyphBitmap glyph;
    };
    std::vector<Placed> glyphs;
    double total_units = 0.0;
};

inline ShapedLine shape_line(std::string_view text,
                             const WeightTable& weights = {}) {
    ShapedLine line;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_scalar(text, pos);
        const double w = weights.weight(cp);
        line.glyphs.push_back({line.total_units, w, glyph_for(cp, weights)});
        line.total_units += w;
    }
    return line;
}

// Samples the shaped line at a horizontal offset in units and a vertical
// fraction of the line height. Used by the renderer's inverse mapping.
inline bool sample_line(const ShapedLine& line, double x_units, double y_frac) {
    if (x_units < 0.0 || x_units >= line.total_units || y_frac < 0.0 ||
        y_frac >= 1.0)
        return false;
    // Linear scan: lines are short (split cap is ~20 units).
    for (const auto& p : line.glyphs) {
        if (x_units < p.start_units || x_units >= p.start_units + p.units)
            continue;
        const double fx = (x_units - p.start_units) / p.units;
        const int gx = static_cast<int>(fx * p.glyph.width);
        const int gy = static_cast<int>(y_frac * p.glyph.height);
        return p.glyph.bit(gx, gy);
    }
    return false;
}

}  // namespace tati
