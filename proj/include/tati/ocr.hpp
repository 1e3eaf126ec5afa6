#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tati/core.hpp"
#include "tati/errors.hpp"
#include "tati/http_client.hpp"
#include "tati/image_io.hpp"
#include "tati/layout.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

enum class OcrKind { REMOTE, MOCK };

enum class MockFallback { EMPTY, ERROR };

// Scripted answers for deterministic runs. Keys are matched against the
// image's source-path stem, then its pixel-content key, then "*".
struct MockOcrScript {
    std::map<std::string, std::vector<RecognizedLine>> images;
    MockFallback fallback = MockFallback::EMPTY;

    static MockOcrScript from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

struct OcrBackendRef {
    OcrKind kind = OcrKind::MOCK;
    std::string endpoint;
    double timeout = 10.0;
    MockOcrScript mock;

    void validate() const {
        if (kind == OcrKind::REMOTE && endpoint.empty())
            throw ConfigError("remote OCR backend needs an endpoint");
        if (timeout <= 0.0) throw ConfigError("OCR timeout must be > 0");
    }
};

// ---------------------------------------------------------------------------
// JSON <-> lines (the shared wire schema for /ocr and the mock script file)
// ---------------------------------------------------------------------------

inline nlohmann::json box_to_json(const TextBox& box) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : box.corners) arr.push_back({c.x, c.y});
    return arr;
}

inline TextBox box_from_json(const nlohmann::json& arr) {
    if (!arr.is_array() || arr.size() != 4)
        throw BackendMalformed("box must be an array of 4 points", arr.dump());
    std::array<Vec2, 4> pts;
    for (std::size_t i = 0; i < 4; ++i) {
        if (!arr[i].is_array() || arr[i].size() != 2)
            throw BackendMalformed("box corner must be [x, y]", arr.dump());
        pts[i] = {arr[i][0].get<double>(), arr[i][1].get<double>()};
    }
    return TextBox::from_points(pts);
}

inline std::vector<RecognizedLine> lines_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("lines") || !doc["lines"].is_array())
        throw BackendMalformed("OCR response must carry a 'lines' array",
                               doc.dump());
    std::vector<RecognizedLine> lines;
    for (const auto& item : doc["lines"]) {
        RecognizedLine line;
        if (!item.contains("box") || !item.contains("text"))
            throw BackendMalformed("OCR line needs 'box' and 'text'",
                                   doc.dump());
        line.box = box_from_json(item["box"]);
        line.text = item["text"].get<std::string>();
        line.confidence =
            item.contains("confidence") ? item["confidence"].get<double>() : 1.0;
        lines.push_back(std::move(line));
    }
    return lines;
}

inline nlohmann::json lines_to_json(const std::vector<RecognizedLine>& lines) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : lines)
        arr.push_back({{"box", box_to_json(l.box)},
                       {"text", l.text},
                       {"confidence", l.confidence}});
    return {{"lines", arr}};
}

inline MockOcrScript MockOcrScript::from_json(const nlohmann::json& doc) {
    MockOcrScript script;
    if (doc.contains("fallback")) {
        const auto f = doc["fallback"].get<std::string>();
        if (f == "empty") script.fallback = MockFallback::EMPTY;
        else if (f == "error") script.fallback = MockFallback::ERROR;
        else throw ConfigError("mock OCR fallback must be 'empty' or 'error'");
    }
    if (doc.contains("images"))
        for (const auto& [key, val] : doc["images"].items())
            script.images[key] = lines_from_json({{"lines", val}});
    return script;
}

inline nlohmann::json MockOcrScript::to_json() const {
    nlohmann::json images = nlohmann::json::object();
    for (const auto& [key, lines] : this->images)
        images[key] = lines_to_json(lines)["lines"];
    return {{"fallback", fallback == MockFallback::EMPTY ? "empty" : "error"},
            {"images", images}};
}

// ---------------------------------------------------------------------------
// Reading order
// ---------------------------------------------------------------------------

// Reorders lines and rewrites the order fields 0..n-1.
//
// With an annotation, annotated_order[k] names the input position of the
// line that reads k-th. Without one, lines are grouped into horizontal
// bands (vertical center distance < 0.6 x the smaller line height joins a
// band), bands sorted top to bottom and left to right within a band —
// the common convention for unannotated images.
inline std::vector<RecognizedLine> order_lines(
    std::vector<RecognizedLine> lines,
    const std::optional<std::vector<int>>& annotated_order = std::nullopt) {
    const int n = static_cast<int>(lines.size());
    if (annotated_order) {
        if (static_cast<int>(annotated_order->size()) != n)
            throw BadAnnotation("annotation length " +
                                std::to_string(annotated_order->size()) +
                                " != line count " + std::to_string(n));
        std::set<int> seen;
        for (int v : *annotated_order) {
            if (v < 0 || v >= n || !seen.insert(v).second)
                throw BadAnnotation(
                    "annotated order is not a permutation of 0.." +
                    std::to_string(n - 1));
        }
        std::vector<RecognizedLine> out;
        out.reserve(lines.size());
        for (int v : *annotated_order) out.push_back(lines[static_cast<std::size_t>(v)]);
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].order = i;
        return out;
    }

    struct Info {
        std::size_t idx;
        Vec2 center;
        double len_v;
    };
    std::vector<Info> info;
    info.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const BoxFrame f = box_frame(lines[i].box);
        info.push_back({i, f.center, f.len_v});
    }
    std::stable_sort(info.begin(), info.end(), [](const Info& a, const Info& b) {
        return a.center.y < b.center.y;
    });
    std::vector<std::vector<Info>> bands;
    for (const auto& it : info) {
        if (!bands.empty()) {
            const Info& tail = bands.back().back();
            if (std::abs(it.center.y - tail.center.y) <
                0.6 * std::min(it.len_v, tail.len_v)) {
                bands.back().push_back(it);
                continue;
            }
        }
        bands.push_back({it});
    }
    std::vector<RecognizedLine> out;
    out.reserve(lines.size());
    for (auto& band : bands) {
        std::stable_sort(band.begin(), band.end(),
                         [](const Info& a, const Info& b) {
                             return a.center.x < b.center.x;
                         });
        for (const auto& it : band) out.push_back(lines[it.idx]);
    }
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].order = i;
    return out;
}

// ---------------------------------------------------------------------------
// run_ocr
// ---------------------------------------------------------------------------

struct OcrRun {
    std::vector<RecognizedLine> lines;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string path_stem(const std::string& path) {
    const auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

inline const std::vector<RecognizedLine>* lookup_script(
    const MockOcrScript& script, const ImageDoc& image) {
    if (!image.source_path.empty()) {
        const auto it = script.images.find(path_stem(image.source_path));
        if (it != script.images.end()) return &it->second;
    }
    const auto px = script.images.find(image.pixel_key());
    if (px != script.images.end()) return &px->second;
    const auto any = script.images.find("*");
    if (any != script.images.end()) return &any->second;
    return nullptr;
}

}  // namespace detail

inline OcrRun run_ocr(const ImageDoc& image, const OcrBackendRef& backend) {
    backend.validate();
    OcrRun run;
    std::vector<RecognizedLine> raw;

    if (backend.kind == OcrKind::MOCK) {
        const auto* scripted = detail::lookup_script(backend.mock, image);
        if (!scripted) {
            if (backend.mock.fallback == MockFallback::ERROR)
                throw BackendUnreachable("mock OCR has no script for image",
                                         image.source_path);
            return run;  // EMPTY fallback
        }
        raw = *scripted;
    } else {
        const nlohmann::json req = {{"image_b64", image_to_b64(image)}};
        const auto res = post_json(backend.endpoint, "/ocr", req, backend.timeout);
        raw = lines_from_json(res);
    }

    for (auto& line : raw) {
        line.text = trim(line.text);
        if (line.text.empty()) {
            run.warnings.push_back("dropped OCR line with empty text");
            continue;
        }
        bool outside = false;
        for (const auto& c : line.box.corners)
            outside = outside || c.x < 0.0 || c.y < 0.0 ||
                      c.x > image.width || c.y > image.height;
        if (outside) {
            line.box = clamp_box(line.box, image.width, image.height);
            run.warnings.push_back("clamped OCR box to image bounds for '" +
                                   line.text + "'");
            try {
                box_frame(line.box);
            } catch (const DegenerateBox&) {
                run.warnings.push_back(
                    "dropped OCR line fully outside the image: '" + line.text +
                    "'");
                continue;
            }
        }
        line.confidence = std::clamp(line.confidence, 0.0, 1.0);
        run.lines.push_back(std::move(line));
    }
    run.lines = order_lines(std::move(run.lines));
    return run;
}

}  // namespace tati
