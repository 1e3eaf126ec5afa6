#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tati/core.hpp"
#include "tati/errors.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Resize policy. Boxes are only touched when the target/source length ratio
// leaves [lo_threshold, hi_threshold]; inside that dead zone resize_box is
// the exact identity, which is also the ablation switch for it.
// ---------------------------------------------------------------------------

enum class ResizeAxis { READING, CROSS, AUTO };

struct ResizePolicy {
    double hi_threshold = 1.2;
    double lo_threshold = 0.8;
    double clamp_min = 0.5;
    double clamp_max = 2.0;
    ResizeAxis axis = ResizeAxis::AUTO;
    bool enabled = true;

    void validate() const {
        if (!(lo_threshold > 0.0 && lo_threshold <= 1.0 &&
              hi_threshold >= 1.0))
            throw ConfigError("resize thresholds must satisfy 0 < lo <= 1 <= hi");
        if (!(clamp_min > 0.0 && clamp_min <= 1.0 && clamp_max >= 1.0))
            throw ConfigError("resize clamps must satisfy 0 < min <= 1 <= max");
    }
};

enum class RenderRoute { DIFFUSION, FALLBACK, SKIP };

inline const char* to_string(RenderRoute r) {
    switch (r) {
        case RenderRoute::DIFFUSION: return "diffusion";
        case RenderRoute::FALLBACK: return "fallback";
        case RenderRoute::SKIP: return "skip";
    }
    return "skip";
}

struct FusionEntry {
    RecognizedLine source_line;
    std::string target_text;
    TextBox target_box;
    std::vector<std::string> lines_split;
    RenderRoute route = RenderRoute::SKIP;
};

struct FusionPlan {
    std::vector<FusionEntry> entries;
};

// ---------------------------------------------------------------------------
// Length ratio
// ---------------------------------------------------------------------------

inline double length_ratio(std::string_view src, std::string_view tgt,
                           const WeightTable& weights = {}) {
    const double src_len = weighted_length(src, weights);
    if (src_len <= 0.0)
        throw EmptySource("length_ratio needs a nonempty source text");
    return weighted_length(tgt, weights) / src_len;
}

// Literal word-count ratio (ablation alternative): whitespace-delimited
// token counts on both sides.
inline double word_count_ratio(std::string_view src, std::string_view tgt) {
    auto words = [](std::string_view s) {
        int n = 0;
        bool in_word = false;
        std::size_t pos = 0;
        while (pos < s.size()) {
            const bool space =
                classify_script(next_scalar(s, pos)) == ScriptClass::SPACE;
            if (!space && !in_word) ++n;
            in_word = !space;
        }
        return n;
    };
    const int src_words = words(src);
    if (src_words == 0)
        throw EmptySource("word_count_ratio needs a nonempty source text");
    return static_cast<double>(words(tgt)) / src_words;
}

// ---------------------------------------------------------------------------
// Box resize
// ---------------------------------------------------------------------------

inline TextBox resize_box(const TextBox& box, double ratio,
                          const ResizePolicy& policy) {
    if (!(ratio > 0.0)) throw BadRatio("resize ratio must be > 0");
    if (!policy.enabled ||
        (ratio >= policy.lo_threshold && ratio <= policy.hi_threshold))
        return box;  // dead zone: exact identity

    const BoxFrame frame = box_frame(box);
    const double f = std::clamp(ratio, policy.clamp_min, policy.clamp_max);
    const Vec2 axis = policy.axis == ResizeAxis::CROSS ? frame.v_axis
                                                       : frame.u_axis;
    TextBox out = box;
    for (auto& c : out.corners) {
        const Vec2 rel = c - frame.center;
        const double along = dot(rel, axis);
        c = c + axis * (along * (f - 1.0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adjacent-line deconfliction
// ---------------------------------------------------------------------------

namespace detail {

// Frame extents of `box` about `origin` along the given axes.
struct Extents {
    double umin, umax, vmin, vmax;
};

inline Extents project_extents(const TextBox& box, Vec2 origin, Vec2 u, Vec2 v) {
    Extents e{1e300, -1e300, 1e300, -1e300};
    for (const auto& c : box.corners) {
        const Vec2 rel = c - origin;
        e.umin = std::min(e.umin, dot(rel, u));
        e.umax = std::max(e.umax, dot(rel, u));
        e.vmin = std::min(e.vmin, dot(rel, v));
        e.vmax = std::max(e.vmax, dot(rel, v));
    }
    return e;
}

inline TextBox box_from_extents(Vec2 origin, Vec2 u, Vec2 v, const Extents& e) {
    const auto pt = [&](double a, double b) {
        return origin + u * a + v * b;
    };
    return TextBox{{pt(e.umin, e.vmin), pt(e.umax, e.vmin), pt(e.umax, e.vmax),
                    pt(e.umin, e.vmax)}};
}

// Pulls the offending side of `victim` back until it clears `other`, along
// the victim's reading axis, never shrinking past `floor_box` (the
// pre-resize box) when one is given. Returns false when nothing changed.
inline bool shrink_away(TextBox& victim, const TextBox& other,
                        const std::optional<TextBox>& floor_box) {
    const auto inter = clip_convex(victim.polygon(), other.polygon());
    if (polygon_area(inter) <= 1e-9) return false;

    const BoxFrame f = box_frame(victim);
    Extents self = project_extents(victim, f.center, f.u_axis, f.v_axis);
    Extents floor_e = self;
    if (floor_box)
        floor_e = project_extents(*floor_box, f.center, f.u_axis, f.v_axis);

    double imin = 1e300, imax = -1e300;
    for (const auto& p : inter) {
        const double a = dot(p - f.center, f.u_axis);
        imin = std::min(imin, a);
        imax = std::max(imax, a);
    }
    const double mid = 0.5 * (imin + imax);
    Extents next = self;
    if (mid >= 0.0) {
        next.umax = std::max(imin, floor_e.umax);  // overlap on the +u side
    } else {
        next.umin = std::min(imax, floor_e.umin);  // overlap on the -u side
    }
    if (next.umax - next.umin <= 1e-9) return false;
    if (next.umin == self.umin && next.umax == self.umax) return false;
    victim = box_from_extents(f.center, f.u_axis, f.v_axis, next);
    return true;
}

}  // namespace detail

// Clamps every corner into the image rectangle [0,W]x[0,H].
inline TextBox clamp_box(const TextBox& box, int width, int height) {
    TextBox out = box;
    for (auto& c : out.corners) {
        c.x = std::clamp(c.x, 0.0, static_cast<double>(width));
        c.y = std::clamp(c.y, 0.0, static_cast<double>(height));
    }
    return out;
}

// Resolves conflicts between resized boxes. Only boxes that actually grew
// (their floor is given and smaller) are shrunk, one offending side at a
// time, until pairwise intersections vanish or the pre-resize size is
// reached. Untouched boxes pass through bit-identical; everything is clipped
// to the image at the end. Count and order are preserved.
inline std::vector<TextBox> deconflict(
    const std::vector<TextBox>& boxes, const ImageDoc& image,
    const std::vector<std::optional<TextBox>>& floors = {}) {
    std::vector<TextBox> out = boxes;
    auto floor_of = [&](std::size_t i) -> std::optional<TextBox> {
        return i < floors.size() ? floors[i] : std::nullopt;
    };
    auto grown = [&](std::size_t i) {
        const auto fl = floor_of(i);
        if (!fl) return false;
        return polygon_area(out[i].polygon()) >
               polygon_area(fl->polygon()) + 1e-9;
    };

    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::size_t j = i + 1; j < out.size(); ++j) {
                if (intersection_area(out[i].polygon(), out[j].polygon()) <=
                    1e-9)
                    continue;
                if (grown(i))
                    changed |= detail::shrink_away(out[i], out[j], floor_of(i));
                if (grown(j) && intersection_area(out[i].polygon(),
                                                  out[j].polygon()) > 1e-9)
                    changed |= detail::shrink_away(out[j], out[i], floor_of(j));
            }
        }
        if (!changed) break;
    }

    for (auto& b : out) {
        bool inside = true;
        for (const auto& c : b.corners)
            inside = inside && c.x >= 0.0 && c.y >= 0.0 &&
                     c.x <= image.width && c.y <= image.height;
        if (!inside) b = clamp_box(b, image.width, image.height);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Long-text splitting for the renderer's per-call cap
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_break_punct(char32_t ch) {
    switch (ch) {
        case U',': case U';': case U':': case U'.': case U'!': case U'?':
        case 0x3001:  // ideographic comma
        case 0x3002:  // ideographic full stop
        case 0xFF0C:  // fullwidth comma
        case 0xFF01: case 0xFF1A: case 0xFF1B: case 0xFF1F:
            return true;
        default:
            return false;
    }
}

}  // namespace detail

// Splits `text` into parts whose weighted length each stays within
// `max_units`. Whitespace runs are collapsed first; breaks prefer whitespace
// (the separator is dropped) or fall after punctuation, and only hard-split
// mid-word when a single chunk exceeds the cap. Empty input gives no parts.
inline std::vector<std::string> split_text(std::string_view text,
                                           double max_units,
                                           const WeightTable& weights = {}) {
    if (!(max_units > 0.0)) throw ConfigError("split cap must be > 0");

    // Normalize: collapse whitespace runs to a single space, trim ends.
    std::vector<char32_t> norm;
    {
        bool pending_space = false;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const char32_t cp = next_scalar(text, pos);
            if (classify_script(cp) == ScriptClass::SPACE) {
                pending_space = !norm.empty();
                continue;
            }
            if (pending_space) norm.push_back(U' ');
            pending_space = false;
            norm.push_back(cp);
        }
    }
    if (norm.empty()) return {};

    for (char32_t cp : norm)
        if (weights.weight(cp) > max_units)
            throw UnsplittableUnit("a single character exceeds the split cap");

    std::vector<std::string> parts;
    std::vector<char32_t> cur;
    double cur_units = 0.0;
    std::ptrdiff_t last_break = -1;  // index in cur after which a break is nice
    bool last_break_is_space = false;

    auto emit = [&](std::size_t upto, bool drop_separator) {
        std::vector<char32_t> head(cur.begin(),
                                   cur.begin() + static_cast<std::ptrdiff_t>(upto));
        std::vector<char32_t> rest(
            cur.begin() + static_cast<std::ptrdiff_t>(upto) +
                (drop_separator ? 1 : 0),
            cur.end());
        while (!rest.empty() && rest.front() == U' ')
            rest.erase(rest.begin());  // separator whitespace is dropped
        parts.push_back(encode_utf8(head));
        cur = std::move(rest);
        cur_units = 0.0;
        for (char32_t cp : cur) cur_units += weights.weight(cp);
        last_break = -1;
    };

    for (char32_t cp : norm) {
        const double w = weights.weight(cp);
        if (cur_units + w > max_units && !cur.empty()) {
            if (cp == U' ') {
                emit(cur.size(), false);
                continue;  // the separator itself is dropped
            }
            if (last_break >= 0) {
                const bool space = last_break_is_space;
                emit(static_cast<std::size_t>(last_break) + (space ? 0 : 1),
                     space);
            } else {
                emit(cur.size(), false);  // hard split mid-run
            }
        }
        if (cp == U' ' && cur.empty()) continue;
        cur.push_back(cp);
        cur_units += w;
        if (cp == U' ') {
            last_break = static_cast<std::ptrdiff_t>(cur.size()) - 1;
            last_break_is_space = true;
        } else if (detail::is_break_punct(cp)) {
            last_break = static_cast<std::ptrdiff_t>(cur.size()) - 1;
            last_break_is_space = false;
        }
    }
    if (!cur.empty()) parts.push_back(encode_utf8(cur));
    return parts;
}

}  // namespace tati
