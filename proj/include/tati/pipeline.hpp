#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tati/config.hpp"
#include "tati/core.hpp"
#include "tati/errors.hpp"
#include "tati/fusion.hpp"
#include "tati/layout.hpp"
#include "tati/ocr.hpp"
#include "tati/translate.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Plan construction: ratio -> resize -> deconflict -> split -> route.
// Single pass per image; deconfliction needs the whole set at once.
// ---------------------------------------------------------------------------

inline FusionPlan plan_fusion(const std::vector<RecognizedLine>& lines,
                              const std::map<int, std::string>& texts,
                              const ImageDoc& image, const ResizePolicy& policy,
                              const WeightTable& weights,
                              const RenderBackendRef& renderer,
                              RatioMode ratio_mode = RatioMode::WEIGHTED) {
    FusionPlan plan;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        FusionEntry entry;
        entry.source_line = lines[i];
        const auto it = texts.find(static_cast<int>(i));
        entry.target_text = it != texts.end() ? it->second : "";
        if (entry.target_text.empty()) {
            entry.route = RenderRoute::SKIP;
            entry.target_box = lines[i].box;
            plan.entries.push_back(std::move(entry));
            continue;
        }
        const double ratio =
            ratio_mode == RatioMode::WEIGHTED
                ? length_ratio(lines[i].text, entry.target_text, weights)
                : word_count_ratio(lines[i].text, entry.target_text);
        entry.target_box =
            ratio > 0.0 ? resize_box(lines[i].box, ratio, policy) : lines[i].box;
        entry.lines_split =
            split_text(entry.target_text, renderer.max_units, weights);
        const bool diffusion =
            renderer.kind == RenderKind::REMOTE_DIFFUSION &&
            script_renderable(entry.target_text, renderer.renderable_scripts);
        entry.route = diffusion ? RenderRoute::DIFFUSION : RenderRoute::FALLBACK;
        plan.entries.push_back(std::move(entry));
    }

    // Deconflict only rendered boxes: a grown neighbor may legitimately take
    // over the erased area of a skipped (merged-away) line.
    std::vector<std::size_t> active;
    std::vector<TextBox> boxes;
    std::vector<std::optional<TextBox>> floors;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        if (plan.entries[i].route == RenderRoute::SKIP) continue;
        active.push_back(i);
        boxes.push_back(plan.entries[i].target_box);
        floors.emplace_back(plan.entries[i].source_line.box);
    }
    const auto resolved = deconflict(boxes, image, floors);
    for (std::size_t k = 0; k < active.size(); ++k)
        plan.entries[active[k]].target_box = resolved[k];
    return plan;
}

// ---------------------------------------------------------------------------
// FusionPlan <-> JSON (the --dump-plan artifact)
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const FusionPlan& plan) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : plan.entries) {
        entries.push_back(
            {{"source",
              {{"box", box_to_json(e.source_line.box)},
               {"text", e.source_line.text},
               {"confidence", e.source_line.confidence},
               {"order", e.source_line.order}}},
             {"target_text", e.target_text},
             {"target_box", box_to_json(e.target_box)},
             {"lines_split", e.lines_split},
             {"route", to_string(e.route)}});
    }
    return {{"entries", entries}};
}

inline FusionPlan plan_from_json(const nlohmann::json& doc) {
    FusionPlan plan;
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw SchemaViolation("plan JSON needs an 'entries' array");
    for (const auto& item : doc["entries"]) {
        FusionEntry e;
        const auto& src = item.at("source");
        e.source_line.box = box_from_json(src.at("box"));
        e.source_line.text = src.at("text").get<std::string>();
        e.source_line.confidence = src.value("confidence", 1.0);
        e.source_line.order = src.value("order", 0);
        e.target_text = item.at("target_text").get<std::string>();
        e.target_box = box_from_json(item.at("target_box"));
        for (const auto& l : item.at("lines_split"))
            e.lines_split.push_back(l.get<std::string>());
        const auto route = item.at("route").get<std::string>();
        if (route == "diffusion") e.route = RenderRoute::DIFFUSION;
        else if (route == "fallback") e.route = RenderRoute::FALLBACK;
        else if (route == "skip") e.route = RenderRoute::SKIP;
        else throw SchemaViolation("unknown plan route: " + route);
        plan.entries.push_back(std::move(e));
    }
    return plan;
}

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

struct StageTiming {
    std::string stage;
    double millis = 0.0;
};

struct PipelineResult {
    ImageDoc final_image;
    TaggedSequence tagged_source;
    TranslationOutcome outcome;
    FusionPlan plan;
    std::vector<StageTiming> trace;
    std::vector<std::string> warnings;
    bool no_text_found = false;
};

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& trace) : trace_(trace) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) -> decltype(fn()) {
        const auto start = std::chrono::steady_clock::now();
        try {
            auto result = fn();
            record(stage, start);
            return result;
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    void record(const std::string& stage,
                std::chrono::steady_clock::time_point start) {
        const auto end = std::chrono::steady_clock::now();
        trace_.push_back(
            {stage,
             std::chrono::duration<double, std::milli>(end - start).count()});
    }

    std::vector<StageTiming>& trace_;
};

}  // namespace detail

// Runs ocr -> order -> serialize -> translate -> plan -> erase -> render and
// keeps every intermediate artifact in the result. With all-mock backends the
// output is byte-stable across runs. An image with no detected text comes
// back unchanged with no_text_found set.
inline PipelineResult run_pipeline(const ImageDoc& image,
                                   const PipelineConfig& cfg) {
    PipelineResult result;
    detail::StageClock clock(result.trace);

    const OcrRun ocr = clock.run("ocr", [&] { return run_ocr(image, cfg.ocr); });
    result.warnings = ocr.warnings;
    if (ocr.lines.empty()) {
        result.final_image = image;
        result.no_text_found = true;
        return result;
    }

    std::vector<std::string> source_texts;
    for (const auto& line : ocr.lines) source_texts.push_back(line.text);
    result.tagged_source = serialize_tagged(source_texts);

    result.outcome = clock.run("translate", [&] {
        if (cfg.translation_mode == PipelineTranslationMode::PER_BOX)
            return translate_per_box(ocr.lines, cfg.pair, cfg.translator,
                                     cfg.prompt_deps(),
                                     cfg.translator.accepts_image ? &image
                                                                  : nullptr);
        return translate_whole(result.tagged_source, cfg.pair, image,
                               cfg.translator, cfg.prompt_deps(),
                               cfg.strict_parsing);
    });

    result.plan = clock.run("plan", [&] {
        return plan_fusion(ocr.lines, result.outcome.texts, image, cfg.resize,
                           cfg.weights, cfg.renderer, cfg.ratio_mode);
    });

    const ImageDoc erased = clock.run("erase", [&] {
        std::vector<TextBox> regions;
        for (const auto& line : ocr.lines) regions.push_back(line.box);
        return erase_regions({image, regions, cfg.erase_method},
                             cfg.erase_backend);
    });

    result.final_image = clock.run("render", [&] {
        return render_text(erased, result.plan, cfg.renderer, cfg.weights);
    });
    result.final_image.source_path = image.source_path;
    return result;
}

}  // namespace tati
