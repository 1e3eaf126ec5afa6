#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tati/boxtag.hpp"
#include "tati/core.hpp"
#include "tati/errors.hpp"
#include "tati/http_client.hpp"
#include "tati/image_io.hpp"
#include "tati/prompting.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

enum class TranslatorKind { REMOTE_TEXT, REMOTE_VISION, MOCK };

enum class MockTranslatorMode { IDENTITY, TABLE, SCRIPTED_RAW };

// Deterministic in-process translator. IDENTITY echoes the tagged source,
// TABLE maps each box content through a lookup (missing entries echo), and
// SCRIPTED_RAW replays canned raw responses — including malformed ones, which
// is how the repair loop gets exercised.
struct MockTranslator {
    MockTranslatorMode mode = MockTranslatorMode::IDENTITY;
    std::map<std::string, std::string> table;
    std::deque<std::string> raw_responses;

    std::string respond(const TaggedSequence& source) {
        switch (mode) {
            case MockTranslatorMode::IDENTITY:
                return source.canonical_text;
            case MockTranslatorMode::TABLE: {
                const auto parsed = parse_tagged(source, true);
                std::vector<std::string> out(
                    static_cast<std::size_t>(source.n_boxes));
                for (const auto& [idx, text] : parsed.texts) {
                    const auto it = table.find(text);
                    out[static_cast<std::size_t>(idx)] =
                        it != table.end() ? it->second : text;
                }
                return serialize_tagged(out).canonical_text;
            }
            case MockTranslatorMode::SCRIPTED_RAW: {
                if (raw_responses.empty())
                    throw BackendUnreachable(
                        "scripted mock translator ran out of responses");
                std::string r = raw_responses.front();
                raw_responses.pop_front();
                return r;
            }
        }
        return {};
    }
};

struct TranslatorBackendRef {
    TranslatorKind kind = TranslatorKind::MOCK;
    std::string endpoint;
    bool accepts_image = false;
    double timeout = 30.0;
    int max_attempts = 3;
    std::shared_ptr<MockTranslator> mock = std::make_shared<MockTranslator>();
    // Decoding parameters forwarded opaquely to remote backends; empty means
    // the backend's deterministic default.
    nlohmann::json decode_params = nlohmann::json::object();

    void validate() const {
        if (kind != TranslatorKind::MOCK && endpoint.empty())
            throw ConfigError("remote translator backend needs an endpoint");
        if (kind == TranslatorKind::REMOTE_VISION && !accepts_image)
            throw ConfigError("vision translator must accept images");
        if (max_attempts < 1)
            throw ConfigError("translator max_attempts must be >= 1");
    }
};

enum class TranslationMode { WHOLE_CONTEXT, PER_BOX, PER_BOX_FALLBACK };

inline const char* to_string(TranslationMode m) {
    switch (m) {
        case TranslationMode::WHOLE_CONTEXT: return "whole_context";
        case TranslationMode::PER_BOX: return "per_box";
        case TranslationMode::PER_BOX_FALLBACK: return "per_box_fallback";
    }
    return "whole_context";
}

struct TranslationOutcome {
    std::map<int, std::string> texts;  // always covers 0..n-1
    TranslationMode mode = TranslationMode::WHOLE_CONTEXT;
    int attempts = 0;
    std::vector<ParseIssue> issues;
    int transport_failures = 0;  // per-box calls that never reached the backend
};

// ---------------------------------------------------------------------------
// Backend call
// ---------------------------------------------------------------------------

namespace detail {

inline std::string call_translator(const TranslatorBackendRef& backend,
                                   const std::string& prompt,
                                   const TaggedSequence& source,
                                   const ImageDoc* image) {
    if (backend.kind == TranslatorKind::MOCK) return backend.mock->respond(source);
    nlohmann::json req = {{"prompt", prompt}};
    if (backend.kind == TranslatorKind::REMOTE_VISION && image)
        req["image_b64"] = image_to_b64(*image);
    if (!backend.decode_params.empty()) req["params"] = backend.decode_params;
    const auto res =
        post_json(backend.endpoint, "/translate", req, backend.timeout);
    if (!res.is_object() || !res.contains("text") || !res["text"].is_string())
        throw BackendMalformed("translator response must carry 'text'",
                               res.dump());
    return res["text"].get<std::string>();
}

inline std::string correction_suffix(const ParseResult& parsed, int n) {
    std::vector<int> missing;
    for (int i = 0; i < n; ++i)
        if (!parsed.texts.count(i)) missing.push_back(i);
    bool duplicated = false;
    for (const auto& issue : parsed.issues)
        duplicated = duplicated || issue.kind == IssueKind::DUPLICATE_INDEX;
    std::string msg =
        "\nYour previous answer did not follow the tag format.";
    if (!missing.empty()) {
        msg += " Missing indices:";
        for (int i : missing) msg += " " + std::to_string(i);
        msg += ".";
    }
    if (duplicated) msg += " Some indices appeared more than once.";
    msg +=
        " Answer again with exactly one <boxN>...</boxN> entry for every "
        "index from 0 to " +
        std::to_string(n - 1) + ".";
    return msg;
}

}  // namespace detail

struct PromptDeps {
    const DemonstrationStore* store = nullptr;
    PromptTemplate tmpl = PromptTemplate::with_default();
};

// ---------------------------------------------------------------------------
// Per-box translation (Table-3 "(box)" ablation arm and the fallback path)
// ---------------------------------------------------------------------------

inline TranslationOutcome translate_per_box(
    const std::vector<RecognizedLine>& lines, const LanguagePair& pair,
    const TranslatorBackendRef& backend, const PromptDeps& deps,
    const ImageDoc* image = nullptr) {
    backend.validate();
    if (lines.empty())
        throw ConfigError("translate_per_box needs at least one line");
    TranslationOutcome outcome;
    outcome.mode = TranslationMode::PER_BOX;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const TaggedSequence single = serialize_tagged({lines[i].text});
        const std::string prompt =
            build_prompt(pair, single, *deps.store, deps.tmpl);
        ++outcome.attempts;
        try {
            const std::string raw =
                detail::call_translator(backend, prompt, single, image);
            auto parsed = parse_tagged(raw, 1, false);
            for (auto& issue : parsed.issues) {
                issue.detail = "box " + std::to_string(i) + ": " + issue.detail;
                outcome.issues.push_back(issue);
            }
            if (parsed.texts.count(0)) {
                outcome.texts[static_cast<int>(i)] = parsed.texts[0];
            } else {
                // Unparseable single-box answer: treat the whole reply as the
                // translation (there is no ambiguity with one box).
                outcome.texts[static_cast<int>(i)] = trim(raw);
            }
        } catch (const BackendUnreachable& e) {
            outcome.texts[static_cast<int>(i)] = "";
            ++outcome.transport_failures;
            outcome.issues.push_back(
                {IssueKind::MISSING_INDEX,
                 "box " + std::to_string(i) + ": backend unreachable: " +
                     e.what(),
                 std::nullopt});
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Whole-context translation (Table-3 "(context)" arm)
// ---------------------------------------------------------------------------

// Translates all boxes in one call. FAILED parses are re-prompted with a
// correction suffix up to backend.max_attempts; if the response still cannot
// be repaired, only the missing indices are retried per box. strict=true
// disables both repair and retries (scoring-fidelity mode): missing indices
// simply become empty strings.
inline TranslationOutcome translate_whole(const TaggedSequence& source,
                                          const LanguagePair& pair,
                                          const std::optional<ImageDoc>& image,
                                          const TranslatorBackendRef& backend,
                                          const PromptDeps& deps,
                                          bool strict = false) {
    backend.validate();
    if (source.n_boxes < 1)
        throw ConfigError("translate_whole needs at least one box");
    const ImageDoc* img =
        backend.accepts_image && image ? &image.value() : nullptr;

    const std::string base_prompt =
        build_prompt(pair, source, *deps.store, deps.tmpl);
    TranslationOutcome outcome;
    outcome.mode = TranslationMode::WHOLE_CONTEXT;

    std::string prompt = base_prompt;
    ParseResult parsed;
    const int attempts_allowed = strict ? 1 : backend.max_attempts;
    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        ++outcome.attempts;
        const std::string raw =
            detail::call_translator(backend, prompt, source, img);
        parsed = parse_tagged(raw, source.n_boxes, strict);
        for (const auto& issue : parsed.issues) outcome.issues.push_back(issue);
        if (parsed.ok()) break;
        prompt = base_prompt + detail::correction_suffix(parsed, source.n_boxes);
    }

    for (const auto& [idx, text] : parsed.texts) outcome.texts[idx] = text;

    if (!parsed.ok()) {
        if (strict) {
            for (int i = 0; i < source.n_boxes; ++i)
                if (!outcome.texts.count(i)) outcome.texts[i] = "";
            return outcome;
        }
        // Per-box fallback for whatever is still missing.
        const auto src_parsed = parse_tagged(source, true);
        std::vector<RecognizedLine> missing_lines;
        std::vector<int> missing_idx;
        for (int i = 0; i < source.n_boxes; ++i) {
            if (outcome.texts.count(i)) continue;
            RecognizedLine line;
            line.text = src_parsed.texts.at(i);
            line.order = i;
            missing_lines.push_back(std::move(line));
            missing_idx.push_back(i);
        }
        outcome.mode = TranslationMode::PER_BOX_FALLBACK;
        try {
            const auto fb =
                translate_per_box(missing_lines, pair, backend, deps, img);
            outcome.attempts += fb.attempts;
            for (const auto& issue : fb.issues) outcome.issues.push_back(issue);
            for (std::size_t k = 0; k < missing_idx.size(); ++k)
                outcome.texts[missing_idx[k]] =
                    fb.texts.count(static_cast<int>(k))
                        ? fb.texts.at(static_cast<int>(k))
                        : "";
            if (fb.transport_failures ==
                static_cast<int>(missing_lines.size()))
                throw FallbackExhausted(
                    "whole-context translation failed and no per-box fallback "
                    "call reached the backend",
                    outcome.texts);
        } catch (const FallbackExhausted&) {
            throw;
        } catch (const Error& e) {
            throw FallbackExhausted(
                std::string("whole-context translation failed and the per-box "
                            "fallback also failed: ") +
                    e.what(),
                outcome.texts);
        }
    }
    return outcome;
}

}  // namespace tati
