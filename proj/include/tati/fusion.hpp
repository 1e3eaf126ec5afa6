#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tati/core.hpp"
#include "tati/errors.hpp"
#include "tati/font.hpp"
#include "tati/http_client.hpp"
#include "tati/image_io.hpp"
#include "tati/layout.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Region rasterization
// ---------------------------------------------------------------------------

namespace detail {

struct PixelRect {
    int x0, y0, x1, y1;  // half-open
    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

inline PixelRect pixel_bbox(const TextBox& box, int width, int height) {
    double mnx = 1e300, mny = 1e300, mxx = -1e300, mxy = -1e300;
    for (const auto& c : box.corners) {
        mnx = std::min(mnx, c.x);
        mny = std::min(mny, c.y);
        mxx = std::max(mxx, c.x);
        mxy = std::max(mxy, c.y);
    }
    PixelRect r;
    r.x0 = std::max(0, static_cast<int>(std::floor(mnx)));
    r.y0 = std::max(0, static_cast<int>(std::floor(mny)));
    r.x1 = std::min(width, static_cast<int>(std::ceil(mxx)));
    r.y1 = std::min(height, static_cast<int>(std::ceil(mxy)));
    return r;
}

inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double t = (p.y - a.y) / (b.y - a.y);
            if (p.x < a.x + t * (b.x - a.x)) inside = !inside;
        }
    }
    return inside;
}

// Pixel mask of a region: a pixel belongs when its center lies inside the
// polygon. Returned as the covered pixel coordinates, bbox-bounded.
inline std::vector<std::pair<int, int>> region_pixels(const TextBox& box,
                                                      int width, int height) {
    const PixelRect r = pixel_bbox(box, width, height);
    std::vector<std::pair<int, int>> px;
    if (r.empty()) return px;
    const Polygon poly = box.polygon();
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            if (point_in_polygon({x + 0.5, y + 0.5}, poly))
                px.emplace_back(x, y);
    return px;
}

// Per-channel lower median over a set of pixels.
inline std::array<std::uint8_t, 3> median_color(
    const ImageDoc& img, const std::vector<std::pair<int, int>>& px) {
    std::array<std::uint8_t, 3> out = {128, 128, 128};
    if (px.empty()) return out;
    std::vector<std::uint8_t> channel(px.size());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < px.size(); ++i)
            channel[i] = img.at(px[i].first, px[i].second)[c];
        std::nth_element(channel.begin(),
                         channel.begin() + (channel.size() - 1) / 2,
                         channel.end());
        out[static_cast<std::size_t>(c)] = channel[(channel.size() - 1) / 2];
    }
    return out;
}

// The 1px-dilated boundary ring: pixels just outside the region mask,
// 8-adjacent to it. Sampling outside the mask keeps leftover text pixels
// from polluting the fill estimate.
inline std::vector<std::pair<int, int>> boundary_ring(
    const std::vector<std::pair<int, int>>& mask, int width, int height) {
    std::set<std::pair<int, int>> in(mask.begin(), mask.end());
    std::set<std::pair<int, int>> ring;
    for (const auto& [x, y] : mask) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                if (!in.count({nx, ny})) ring.insert({nx, ny});
            }
    }
    return {ring.begin(), ring.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Erasure
// ---------------------------------------------------------------------------

enum class EraseMethod { REMOTE_STROKE, SOLID_FILL };

struct ErasureRequest {
    ImageDoc image;
    std::vector<TextBox> regions;
    EraseMethod method = EraseMethod::SOLID_FILL;
};

struct EraseBackend {
    std::string endpoint;
    double timeout = 30.0;
    bool erase_fallback = false;  // SOLID_FILL when the remote eraser is down
};

// Fills each region with the lower median of its 1px boundary ring. Pixels
// outside the union of regions are untouched.
inline ImageDoc erase_solid_fill(const ImageDoc& image,
                                 const std::vector<TextBox>& regions) {
    ImageDoc out = image;
    for (const auto& region : regions) {
        const auto mask = detail::region_pixels(region, image.width, image.height);
        if (mask.empty()) continue;
        auto ring = detail::boundary_ring(mask, image.width, image.height);
        // A region covering the whole image has no outside ring; fall back to
        // the region's own pixels.
        const auto fill = detail::median_color(image, ring.empty() ? mask : ring);
        for (const auto& [x, y] : mask) {
            std::uint8_t* px = out.at(x, y);
            px[0] = fill[0];
            px[1] = fill[1];
            px[2] = fill[2];
        }
    }
    return out;
}

inline ImageDoc erase_regions(const ErasureRequest& req,
                              const EraseBackend& backend = {}) {
    if (!req.image.valid()) throw ConfigError("erase input image is invalid");
    if (req.regions.empty()) return req.image;
    if (req.method == EraseMethod::SOLID_FILL)
        return erase_solid_fill(req.image, req.regions);

    if (backend.endpoint.empty())
        throw ConfigError("stroke erasure needs an endpoint");
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : req.regions) {
        nlohmann::json corners = nlohmann::json::array();
        for (const auto& c : r.corners) corners.push_back({c.x, c.y});
        regions.push_back(corners);
    }
    const nlohmann::json body = {{"image_b64", image_to_b64(req.image)},
                                 {"regions", regions}};
    try {
        const auto res =
            post_json(backend.endpoint, "/erase", body, backend.timeout);
        if (!res.contains("image_b64"))
            throw BackendMalformed("erase response must carry 'image_b64'",
                                   res.dump());
        ImageDoc out = image_from_b64(res["image_b64"].get<std::string>());
        if (out.width != req.image.width || out.height != req.image.height)
            throw BackendMalformed("erase response changed image dimensions",
                                   res.dump());
        out.source_path = req.image.source_path;
        return out;
    } catch (const BackendUnreachable&) {
        if (!backend.erase_fallback) throw;
        return erase_solid_fill(req.image, req.regions);
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class RenderKind { REMOTE_DIFFUSION, FALLBACK_RASTER };

struct RenderBackendRef {
    RenderKind kind = RenderKind::FALLBACK_RASTER;
    std::string endpoint;
    double timeout = 60.0;
    double max_units = 20.0;
    std::set<ScriptClass> renderable_scripts = {
        ScriptClass::CJK,   ScriptClass::LATIN, ScriptClass::HANGUL,
        ScriptClass::KANA,  ScriptClass::DIGIT, ScriptClass::SPACE};
    bool allow_fallback = true;  // re-route unrenderable entries locally

    void validate() const {
        if (kind == RenderKind::REMOTE_DIFFUSION && endpoint.empty())
            throw ConfigError("diffusion renderer needs an endpoint");
        if (max_units <= 0.0)
            throw ConfigError("renderer max_units must be > 0");
    }
};

// Punctuation and symbols ride along with whichever scripts are enabled;
// only real foreign-script letters make a text unrenderable.
inline bool is_render_neutral(char32_t cp) {
    if (cp < 0x80) return true;                      // ASCII punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return true;   // CJK punctuation
    if (cp >= 0xFF00 && cp <= 0xFF65) return true;   // fullwidth forms
    if (cp >= 0x2000 && cp <= 0x206F) return true;   // general punctuation
    return false;
}

inline bool script_renderable(std::string_view text,
                              const std::set<ScriptClass>& renderable) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_scalar(text, pos);
        const ScriptClass s = classify_script(cp);
        if (renderable.count(s)) continue;
        if (s == ScriptClass::OTHER && is_render_neutral(cp)) continue;
        return false;
    }
    return true;
}

namespace detail {

// Draws one entry's split lines into its target box. Inverse mapping: every
// covered pixel is transformed into the box frame and sampled against the
// shaped line, so only pixels inside the quad are ever written.
inline void raster_entry(ImageDoc& img, const FusionEntry& entry,
                         const WeightTable& weights) {
    if (entry.lines_split.empty()) return;
    const BoxFrame frame = box_frame(entry.target_box);
    std::vector<ShapedLine> shaped;
    double max_units = 0.0;
    for (const auto& line : entry.lines_split) {
        shaped.push_back(shape_line(line, weights));
        max_units = std::max(max_units, shaped.back().total_units);
    }
    if (max_units <= 0.0) return;

    const int k = static_cast<int>(shaped.size());
    const double unit_px = 0.9 * frame.len_u / max_units;
    const double line_h = std::min(2.0 * unit_px, frame.len_v / k);
    if (line_h <= 0.0) return;
    const double block_top = -0.5 * line_h * k;

    // Text color: whichever of black/white contrasts with the erased fill.
    const int cx = std::clamp(static_cast<int>(frame.center.x), 0, img.width - 1);
    const int cy = std::clamp(static_cast<int>(frame.center.y), 0, img.height - 1);
    const std::uint8_t* bg = img.at(cx, cy);
    const double luma = 0.299 * bg[0] + 0.587 * bg[1] + 0.114 * bg[2];
    const std::uint8_t ink = luma > 127.0 ? 0 : 255;

    const PixelRect r = pixel_bbox(entry.target_box, img.width, img.height);
    const Polygon poly = entry.target_box.polygon();
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            const Vec2 p{x + 0.5, y + 0.5};
            if (!point_in_polygon(p, poly)) continue;
            const Vec2 rel = p - frame.center;
            const double a = dot(rel, frame.u_axis);
            const double b = dot(rel, frame.v_axis);
            const double row = (b - block_top) / line_h;
            if (row < 0.0 || row >= k) continue;
            const int li = static_cast<int>(row);
            const ShapedLine& sl = shaped[static_cast<std::size_t>(li)];
            const double line_w = sl.total_units * unit_px;
            const double x_units = (a + 0.5 * line_w) / unit_px;
            if (!sample_line(sl, x_units, row - li)) continue;
            std::uint8_t* px = img.at(x, y);
            px[0] = px[1] = px[2] = ink;
        }
    }
}

}  // namespace detail

// Renders the plan's target texts onto (a copy of) the erased image. SKIP
// entries leave their pixels untouched. With a diffusion backend, all
// DIFFUSION-routed jobs of the image go out in a single request; FALLBACK
// entries are rastered locally either way.
inline ImageDoc render_text(const ImageDoc& image, const FusionPlan& plan,
                            const RenderBackendRef& backend,
                            const WeightTable& weights = {}) {
    backend.validate();
    ImageDoc out = image;

    std::vector<const FusionEntry*> diffusion_jobs;
    std::vector<const FusionEntry*> fallback_jobs;
    for (const auto& entry : plan.entries) {
        if (entry.route == RenderRoute::SKIP || entry.target_text.empty())
            continue;
        if (backend.kind == RenderKind::REMOTE_DIFFUSION &&
            entry.route == RenderRoute::DIFFUSION) {
            if (!script_renderable(entry.target_text,
                                   backend.renderable_scripts)) {
                if (!backend.allow_fallback)
                    throw UnrenderableScript(
                        "entry script outside the renderer's repertoire: " +
                        entry.target_text);
                fallback_jobs.push_back(&entry);
                continue;
            }
            diffusion_jobs.push_back(&entry);
        } else {
            fallback_jobs.push_back(&entry);
        }
    }

    if (!diffusion_jobs.empty()) {
        nlohmann::json jobs = nlohmann::json::array();
        for (const auto* e : diffusion_jobs) {
            nlohmann::json corners = nlohmann::json::array();
            for (const auto& c : e->target_box.corners)
                corners.push_back({c.x, c.y});
            jobs.push_back({{"box", corners},
                            {"text", e->target_text},
                            {"lines", e->lines_split}});
        }
        const nlohmann::json body = {{"image_b64", image_to_b64(out)},
                                     {"jobs", jobs}};
        const auto res =
            post_json(backend.endpoint, "/render", body, backend.timeout);
        if (!res.contains("image_b64"))
            throw BackendMalformed("render response must carry 'image_b64'",
                                   res.dump());
        ImageDoc rendered = image_from_b64(res["image_b64"].get<std::string>());
        if (rendered.width != out.width || rendered.height != out.height)
            throw BackendMalformed("render response changed image dimensions",
                                   res.dump());
        rendered.source_path = out.source_path;
        out = std::move(rendered);
    }

    for (const auto* e : fallback_jobs) detail::raster_entry(out, *e, weights);
    return out;
}

}  // namespace tati
