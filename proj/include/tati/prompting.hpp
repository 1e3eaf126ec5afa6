#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tati/boxtag.hpp"
#include "tati/errors.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Language pairs. The render backend restricts the supported set to
// zh/en/ko/ja.
// ---------------------------------------------------------------------------

struct LanguagePair {
    std::string src;
    std::string tgt;

    static LanguagePair parse(std::string_view s) {
        const auto dash = s.find('-');
        if (dash == std::string_view::npos)
            throw ConfigError("language pair must look like 'zh-en', got '" +
                              std::string(s) + "'");
        LanguagePair p{std::string(s.substr(0, dash)),
                       std::string(s.substr(dash + 1))};
        p.validate();
        return p;
    }

    void validate() const {
        static const std::vector<std::string> supported = {"zh", "en", "ko",
                                                           "ja"};
        auto ok = [&](const std::string& c) {
            for (const auto& s : supported)
                if (s == c) return true;
            return false;
        };
        if (!ok(src) || !ok(tgt))
            throw ConfigError("unsupported language in pair " + str() +
                              " (supported: zh, en, ko, ja)");
        if (src == tgt)
            throw ConfigError("language pair must have distinct languages: " +
                              str());
    }

    std::string str() const { return src + "-" + tgt; }
    bool operator==(const LanguagePair&) const = default;
    bool operator<(const LanguagePair& o) const {
        return str() < o.str();
    }
};

inline std::string language_name(const std::string& code) {
    if (code == "zh") return "Chinese";
    if (code == "en") return "English";
    if (code == "ko") return "Korean";
    if (code == "ja") return "Japanese";
    return code;
}

// ---------------------------------------------------------------------------
// Demonstrations
// ---------------------------------------------------------------------------

struct Demonstration {
    LanguagePair pair;
    std::string source_tagged;
    std::string target_tagged;
    std::string note;

    // Both sides must parse CLEAN with the same box count.
    void validate() const {
        const int n = count_boxes(source_tagged);
        const auto src_res = parse_tagged(source_tagged, n, true);
        const auto tgt_res = parse_tagged(target_tagged, n, true);
        if (src_res.status != ParseStatus::CLEAN ||
            tgt_res.status != ParseStatus::CLEAN)
            throw SchemaViolation("demonstration for " + pair.str() +
                                  " is not a clean tagged pair: " +
                                  source_tagged);
    }

private:
    static int count_boxes(std::string_view tagged) {
        int n = 0;
        for (const auto& tok : detail::tokenize(tagged))
            if (tok.kind == detail::Token::OPEN) ++n;
        return n;
    }
};

// Fixed, versioned demonstration store: JSON array of
//   {"pair": "ko-zh", "demos": [{"src": "...", "tgt": "...", "note": "..."}]}
// Demos are never sampled; prompt assembly uses store order so identical
// inputs give byte-identical prompts.
class DemonstrationStore {
public:
    static DemonstrationStore from_json(const nlohmann::json& doc) {
        DemonstrationStore store;
        if (!doc.is_array())
            throw SchemaViolation("demonstration store root must be an array");
        for (const auto& block : doc) {
            const auto pair = LanguagePair::parse(
                block.at("pair").get<std::string>());
            for (const auto& d : block.at("demos")) {
                Demonstration demo;
                demo.pair = pair;
                demo.source_tagged = d.at("src").get<std::string>();
                demo.target_tagged = d.at("tgt").get<std::string>();
                if (d.contains("note")) demo.note = d["note"].get<std::string>();
                demo.validate();
                store.demos_[pair].push_back(std::move(demo));
            }
        }
        return store;
    }

    static DemonstrationStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open demonstration store: " + path);
        nlohmann::json doc;
        in >> doc;
        return from_json(doc);
    }

    const std::vector<Demonstration>& demos_for(const LanguagePair& pair) const {
        static const std::vector<Demonstration> empty;
        const auto it = demos_.find(pair);
        return it != demos_.end() ? it->second : empty;
    }

    int count(const LanguagePair& pair) const {
        return static_cast<int>(demos_for(pair).size());
    }

private:
    std::map<LanguagePair, std::vector<Demonstration>> demos_;
};

// ---------------------------------------------------------------------------
// Prompt template
// ---------------------------------------------------------------------------

struct PromptTemplate {
    std::string instruction_text;
    int shots = 5;

    static const std::string& default_text() {
        static const std::string text =
            "You are a professional translator working on text found inside "
            "images.\n"
            "Translate from {src_lang} to {tgt_lang}.\n"
            "The input wraps each detected text segment in tags like "
            "<box0></box0>, numbered in the order they were read from the "
            "image.\n"
            "Answer with the translation of the whole input, keeping every "
            "tag: each <boxN></boxN> of the input must appear exactly once in "
            "your answer, in the same numbering.\n"
            "The segments below belong to one scene, so translate them "
            "together; when the target language needs a different word order, "
            "move words across boxes while keeping every tag in place. A box "
            "may be left empty when its content merges into a neighbor.\n"
            "Reply with the tagged sequence only.\n"
            "{demos}"
            "Input: {input}\n"
            "Output:";
        return text;
    }

    static PromptTemplate with_default(int shots_ = 5) {
        PromptTemplate t;
        t.instruction_text = default_text();
        t.shots = shots_;
        t.validate();
        return t;
    }

    static PromptTemplate from_file(const std::string& path, int shots_ = 5) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open prompt template: " + path);
        PromptTemplate t;
        t.instruction_text.assign((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
        t.shots = shots_;
        t.validate();
        return t;
    }

    void validate() const {
        for (const char* ph :
             {"{src_lang}", "{tgt_lang}", "{demos}", "{input}"}) {
            std::size_t count = 0;
            std::size_t pos = instruction_text.find(ph);
            while (pos != std::string::npos) {
                ++count;
                pos = instruction_text.find(ph, pos + 1);
            }
            if (count != 1)
                throw ConfigError(std::string("prompt template must contain ") +
                                  ph + " exactly once (found " +
                                  std::to_string(count) + ")");
        }
        if (shots < 0) throw ConfigError("prompt shots must be >= 0");
    }
};

namespace detail {

inline void replace_once(std::string& s, std::string_view placeholder,
                         std::string_view value) {
    const auto pos = s.find(placeholder);
    if (pos != std::string::npos) s.replace(pos, placeholder.size(), value);
}

}  // namespace detail

// Assembles the few-shot prompt. Demonstrations appear in store order; the
// canonical tagged source is substituted verbatim, exactly once.
inline std::string build_prompt(const LanguagePair& pair,
                                const TaggedSequence& source,
                                const DemonstrationStore& store,
                                const PromptTemplate& tmpl) {
    const auto& demos = store.demos_for(pair);
    if (static_cast<int>(demos.size()) < tmpl.shots)
        throw InsufficientDemos(pair.str(), static_cast<int>(demos.size()),
                                tmpl.shots);
    std::string demo_block;
    for (int i = 0; i < tmpl.shots; ++i) {
        demo_block += "Input: " + demos[static_cast<std::size_t>(i)].source_tagged + "\n";
        demo_block += "Output: " + demos[static_cast<std::size_t>(i)].target_tagged + "\n\n";
    }
    std::string prompt = tmpl.instruction_text;
    detail::replace_once(prompt, "{src_lang}", language_name(pair.src));
    detail::replace_once(prompt, "{tgt_lang}", language_name(pair.tgt));
    detail::replace_once(prompt, "{demos}",
                         demo_block.empty() ? "" : "\n" + demo_block);
    detail::replace_once(prompt, "{input}", source.canonical_text);
    return prompt;
}

}  // namespace tati
