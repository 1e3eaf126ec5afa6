#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "tati/errors.hpp"
#include "tati/fusion.hpp"
#include "tati/layout.hpp"
#include "tati/ocr.hpp"
#include "tati/prompting.hpp"
#include "tati/translate.hpp"

namespace tati {

enum class PipelineTranslationMode { WHOLE, PER_BOX };

enum class RatioMode { WEIGHTED, WORD_COUNT };

// Everything a pipeline run needs, resolved and validated. Loaded from a
// single JSON file; relative paths are resolved against the config's own
// directory so configs can travel with their fixtures.
struct PipelineConfig {
    LanguagePair pair{"zh", "en"};
    OcrBackendRef ocr;
    TranslatorBackendRef translator;
    EraseMethod erase_method = EraseMethod::SOLID_FILL;
    EraseBackend erase_backend;
    RenderBackendRef renderer;
    ResizePolicy resize;
    WeightTable weights;
    DemonstrationStore store;
    PromptTemplate tmpl = PromptTemplate::with_default();
    int parallelism = 1;
    bool strict_parsing = false;
    PipelineTranslationMode translation_mode = PipelineTranslationMode::WHOLE;
    RatioMode ratio_mode = RatioMode::WEIGHTED;
    std::string comet_endpoint;  // empty: COMET column omitted from reports
    double comet_timeout = 60.0;
    std::string fingerprint;  // stable hash of the source JSON

    PromptDeps prompt_deps() const { return {&store, tmpl}; }
};

namespace detail {

inline std::string resolve_path(const std::string& base_dir,
                                const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

inline void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path))
        throw ConfigError(what + " does not exist: " + path);
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& doc,
                                       const std::string& base_dir = {}) {
    PipelineConfig cfg;
    if (!doc.contains("pair"))
        throw ConfigError("config needs a 'pair' (e.g. \"zh-en\")");
    cfg.pair = LanguagePair::parse(doc["pair"].get<std::string>());

    if (doc.contains("ocr")) {
        const auto& o = doc["ocr"];
        const auto kind = o.value("kind", std::string("mock"));
        if (kind == "mock") cfg.ocr.kind = OcrKind::MOCK;
        else if (kind == "remote") cfg.ocr.kind = OcrKind::REMOTE;
        else throw ConfigError("ocr.kind must be 'mock' or 'remote'");
        cfg.ocr.endpoint = o.value("endpoint", std::string());
        cfg.ocr.timeout = o.value("timeout", 10.0);
        if (o.contains("script")) {
            if (o["script"].is_string()) {
                const auto path = detail::resolve_path(
                    base_dir, o["script"].get<std::string>());
                detail::require_file(path, "ocr.script");
                std::ifstream in(path);
                nlohmann::json s;
                in >> s;
                cfg.ocr.mock = MockOcrScript::from_json(s);
            } else {
                cfg.ocr.mock = MockOcrScript::from_json(o["script"]);
            }
        }
    }

    if (doc.contains("translator")) {
        const auto& t = doc["translator"];
        const auto kind = t.value("kind", std::string("mock"));
        if (kind == "mock") cfg.translator.kind = TranslatorKind::MOCK;
        else if (kind == "remote_text") cfg.translator.kind = TranslatorKind::REMOTE_TEXT;
        else if (kind == "remote_vision") {
            cfg.translator.kind = TranslatorKind::REMOTE_VISION;
            cfg.translator.accepts_image = true;
        } else {
            throw ConfigError(
                "translator.kind must be mock, remote_text or remote_vision");
        }
        cfg.translator.endpoint = t.value("endpoint", std::string());
        cfg.translator.timeout = t.value("timeout", 30.0);
        cfg.translator.max_attempts = t.value("max_attempts", 3);
        if (t.contains("params")) cfg.translator.decode_params = t["params"];
        if (t.contains("mock")) {
            const auto& m = t["mock"];
            const auto mode = m.value("mode", std::string("identity"));
            auto& mock = *cfg.translator.mock;
            if (mode == "identity") mock.mode = MockTranslatorMode::IDENTITY;
            else if (mode == "table") mock.mode = MockTranslatorMode::TABLE;
            else if (mode == "scripted_raw") mock.mode = MockTranslatorMode::SCRIPTED_RAW;
            else throw ConfigError("translator.mock.mode must be identity, table or scripted_raw");
            if (m.contains("table"))
                for (const auto& [k, v] : m["table"].items())
                    mock.table[k] = v.get<std::string>();
            if (m.contains("raw"))
                for (const auto& r : m["raw"])
                    mock.raw_responses.push_back(r.get<std::string>());
            if (mock.mode == MockTranslatorMode::TABLE && mock.table.empty())
                throw ConfigError("table mock translator needs a 'table'");
            if (mock.mode == MockTranslatorMode::SCRIPTED_RAW &&
                mock.raw_responses.empty())
                throw ConfigError("scripted mock translator needs 'raw' responses");
        }
    }

    if (doc.contains("eraser")) {
        const auto& e = doc["eraser"];
        const auto method = e.value("method", std::string("solid_fill"));
        if (method == "solid_fill") cfg.erase_method = EraseMethod::SOLID_FILL;
        else if (method == "remote_stroke") cfg.erase_method = EraseMethod::REMOTE_STROKE;
        else throw ConfigError("eraser.method must be solid_fill or remote_stroke");
        cfg.erase_backend.endpoint = e.value("endpoint", std::string());
        cfg.erase_backend.timeout = e.value("timeout", 30.0);
        cfg.erase_backend.erase_fallback = e.value("erase_fallback", false);
        if (cfg.erase_method == EraseMethod::REMOTE_STROKE &&
            cfg.erase_backend.endpoint.empty())
            throw ConfigError("remote_stroke eraser needs an endpoint");
    }

    if (doc.contains("renderer")) {
        const auto& r = doc["renderer"];
        const auto kind = r.value("kind", std::string("fallback_raster"));
        if (kind == "fallback_raster") cfg.renderer.kind = RenderKind::FALLBACK_RASTER;
        else if (kind == "remote_diffusion") cfg.renderer.kind = RenderKind::REMOTE_DIFFUSION;
        else throw ConfigError("renderer.kind must be fallback_raster or remote_diffusion");
        cfg.renderer.endpoint = r.value("endpoint", std::string());
        cfg.renderer.timeout = r.value("timeout", 60.0);
        cfg.renderer.max_units = r.value("max_units", 20.0);
        cfg.renderer.allow_fallback = r.value("allow_fallback", true);
        if (r.contains("renderable_scripts")) {
            cfg.renderer.renderable_scripts.clear();
            for (const auto& s : r["renderable_scripts"]) {
                const auto sc = script_from_string(s.get<std::string>());
                if (!sc) throw ConfigError("unknown script class: " + s.dump());
                cfg.renderer.renderable_scripts.insert(*sc);
            }
        }
        cfg.renderer.validate();
    }

    if (doc.contains("resize")) {
        const auto& z = doc["resize"];
        cfg.resize.enabled = z.value("enabled", true);
        cfg.resize.hi_threshold = z.value("hi_threshold", 1.2);
        cfg.resize.lo_threshold = z.value("lo_threshold", 0.8);
        cfg.resize.clamp_min = z.value("clamp_min", 0.5);
        cfg.resize.clamp_max = z.value("clamp_max", 2.0);
        const auto axis = z.value("axis", std::string("auto"));
        if (axis == "auto") cfg.resize.axis = ResizeAxis::AUTO;
        else if (axis == "reading") cfg.resize.axis = ResizeAxis::READING;
        else if (axis == "cross") cfg.resize.axis = ResizeAxis::CROSS;
        else throw ConfigError("resize.axis must be auto, reading or cross");
        cfg.resize.validate();
    }

    if (doc.contains("weights")) {
        for (const auto& [k, v] : doc["weights"].items()) {
            const auto sc = script_from_string(k);
            if (!sc) throw ConfigError("unknown script class in weights: " + k);
            cfg.weights.units[*sc] = v.get<double>();
        }
    }

    if (!doc.contains("prompting") || !doc["prompting"].contains("store"))
        throw ConfigError("config needs prompting.store (demonstration file)");
    {
        const auto& p = doc["prompting"];
        const auto store_path =
            detail::resolve_path(base_dir, p["store"].get<std::string>());
        detail::require_file(store_path, "prompting.store");
        cfg.store = DemonstrationStore::load(store_path);
        const int shots = p.value("shots", 5);
        if (p.contains("template") && !p["template"].is_null()) {
            const auto tpath = detail::resolve_path(
                base_dir, p["template"].get<std::string>());
            detail::require_file(tpath, "prompting.template");
            cfg.tmpl = PromptTemplate::from_file(tpath, shots);
        } else {
            cfg.tmpl = PromptTemplate::with_default(shots);
        }
    }

    cfg.parallelism = doc.value("parallelism", 1);
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    cfg.strict_parsing = doc.value("strict_parsing", false);

    const auto tmode = doc.value("translation_mode", std::string("whole"));
    if (tmode == "whole") cfg.translation_mode = PipelineTranslationMode::WHOLE;
    else if (tmode == "per_box") cfg.translation_mode = PipelineTranslationMode::PER_BOX;
    else throw ConfigError("translation_mode must be 'whole' or 'per_box'");

    const auto rmode = doc.value("ratio_mode", std::string("weighted"));
    if (rmode == "weighted") cfg.ratio_mode = RatioMode::WEIGHTED;
    else if (rmode == "word_count") cfg.ratio_mode = RatioMode::WORD_COUNT;
    else throw ConfigError("ratio_mode must be 'weighted' or 'word_count'");

    if (doc.contains("comet")) {
        cfg.comet_endpoint = doc["comet"].value("endpoint", std::string());
        cfg.comet_timeout = doc["comet"].value("timeout", 60.0);
    }

    cfg.ocr.validate();
    cfg.translator.validate();
    cfg.fingerprint = to_hex(fnv1a64(doc.dump()));
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(
        doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace tati
