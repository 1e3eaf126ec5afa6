#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace tati {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

inline Vec2 normalized(Vec2 a) {
    const double n = norm(a);
    return n > 0.0 ? Vec2{a.x / n, a.y / n} : Vec2{0.0, 0.0};
}

using Polygon = std::vector<Vec2>;

// Signed shoelace area. Image coordinates have y growing downward, so a
// visually clockwise ring comes out positive here.
inline double signed_area(const Polygon& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2 a = p[i];
        const Vec2 b = p[(i + 1) % p.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return -0.5 * s;
}

inline double polygon_area(const Polygon& p) { return std::abs(signed_area(p)); }

// Clips `subject` against convex `clip` (Sutherland-Hodgman). Both polygons
// must be convex; orientation of `clip` is detected from its signed area.
inline Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
    if (subject.empty() || clip.size() < 3) return {};
    const double orient = signed_area(clip) >= 0.0 ? 1.0 : -1.0;
    Polygon out = subject;
    for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Vec2 a = clip[i];
        const Vec2 b = clip[(i + 1) % clip.size()];
        const Vec2 edge = b - a;
        auto inside = [&](Vec2 p) { return orient * cross(edge, p - a) <= 1e-12; };
        Polygon in;
        in.swap(out);
        for (std::size_t j = 0; j < in.size(); ++j) {
            const Vec2 cur = in[j];
            const Vec2 nxt = in[(j + 1) % in.size()];
            const bool cur_in = inside(cur);
            const bool nxt_in = inside(nxt);
            if (cur_in) out.push_back(cur);
            if (cur_in != nxt_in) {
                const double den = cross(edge, nxt - cur);
                if (std::abs(den) > 1e-15) {
                    const double t = cross(edge, a - cur) / den;
                    out.push_back(cur + (nxt - cur) * t);
                }
            }
        }
    }
    return out;
}

inline double intersection_area(const Polygon& a, const Polygon& b) {
    return polygon_area(clip_convex(a, b));
}

inline double iou(const Polygon& a, const Polygon& b) {
    const double inter = intersection_area(a, b);
    const double uni = polygon_area(a) + polygon_area(b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// True when the quad's edges self-intersect (non-adjacent edge pairs cross).
inline bool quad_is_simple(const std::array<Vec2, 4>& c) {
    auto segs_cross = [](Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
        const double d1 = cross(p2 - p1, q1 - p1);
        const double d2 = cross(p2 - p1, q2 - p1);
        const double d3 = cross(q2 - q1, p1 - q1);
        const double d4 = cross(q2 - q1, p2 - q1);
        return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
    };
    // Only the two non-adjacent pairs can invalidate a quad: (0-1, 2-3) and
    // (1-2, 3-0).
    return !segs_cross(c[0], c[1], c[2], c[3]) &&
           !segs_cross(c[1], c[2], c[3], c[0]);
}

}  // namespace tati
