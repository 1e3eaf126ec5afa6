#!/usr/bin/env python3
"""Regenerates include/tati/font_data.hpp.

Rasterizes printable ASCII from DejaVu Sans Mono into a fixed 8x16 1-bit
cell atlas. DejaVu Sans Mono is distributed under the free DejaVu Fonts
license (Bitstream Vera derivative); the generated bitmaps carry an
attribution note. Run from the repository root:

    python3 tools/gen_font.py
"""

from PIL import Image, ImageDraw, ImageFont

FONT_PATH = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
CELL_W, CELL_H = 8, 16
SIZE = 13
THRESHOLD = 100
OUT = "include/tati/font_data.hpp"


def glyph_rows(font, ch):
    img = Image.new("L", (CELL_W, CELL_H), 0)
    ImageDraw.Draw(img).text((0, 0), ch, fill=255, font=font)
    px = img.load()
    rows = []
    for y in range(CELL_H):
        byte = 0
        for x in range(CELL_W):
            if px[x, y] > THRESHOLD:
                byte |= 1 << (7 - x)
        rows.append(byte)
    return rows


def main():
    font = ImageFont.truetype(FONT_PATH, SIZE)
    lines = [
        "#pragma once",
        "",
        "// Generated by tools/gen_font.py — do not edit by hand.",
        "// 8x16 1-bit glyph cells for printable ASCII (0x20..0x7E), one byte",
        "// per row, MSB = leftmost pixel. Rasterized from DejaVu Sans Mono",
        "// (DejaVu Fonts license, a free Bitstream Vera derivative).",
        "",
        "#include <cstdint>",
        "",
        "namespace tati::fontdata {",
        "",
        f"inline constexpr int kCellWidth = {CELL_W};",
        f"inline constexpr int kCellHeight = {CELL_H};",
        "inline constexpr char32_t kFirstChar = 0x20;",
        "inline constexpr char32_t kLastChar = 0x7E;",
        "",
        "inline constexpr unsigned char kAsciiGlyphs[95][16] = {",
    ]
    for code in range(0x20, 0x7F):
        ch = chr(code)
        rows = glyph_rows(font, ch)
        body = ", ".join(f"0x{b:02X}" for b in rows)
        label = "backslash" if ch == "\\" else ch
        lines.append(f"    {{{body}}},  // '{label}'")
    lines += ["};", "", "}  // namespace tati::fontdata", ""]
    with open(OUT, "w") as f:
        f.write("\n".join(lines))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
