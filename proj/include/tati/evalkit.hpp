#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tati/boxtag.hpp"
#include "tati/core.hpp"
#include "tati/errors.hpp"
#include "tati/ocr.hpp"
#include "tati/prompting.hpp"
#include "tati/translate.hpp"

namespace tati {

// ---------------------------------------------------------------------------
// Dataset (MTIT6 manifest format)
// ---------------------------------------------------------------------------

struct DatasetLine {
    TextBox box;
    std::string src_text;
    int order = 0;
};

struct DatasetRecord {
    std::string id;          // record file stem
    std::string image_path;  // resolved against the dataset root
    LanguagePair pair{"zh", "en"};
    std::vector<DatasetLine> lines;
    std::string reference_tagged;
    std::string reference_joined;
};

inline DatasetRecord record_from_json(const nlohmann::json& doc,
                                      const std::string& root,
                                      const std::string& id) {
    DatasetRecord rec;
    rec.id = id;
    auto need = [&](const char* field) -> const nlohmann::json& {
        if (!doc.contains(field))
            throw SchemaViolation("record " + id + " is missing '" + field + "'");
        return doc[field];
    };
    rec.image_path =
        (std::filesystem::path(root) / need("image").get<std::string>())
            .string();
    rec.pair = LanguagePair::parse(need("pair").get<std::string>());
    for (const auto& l : need("lines")) {
        DatasetLine line;
        if (!l.contains("box") || !l.contains("src_text") || !l.contains("order"))
            throw SchemaViolation("record " + id +
                                  ": line needs box, src_text and order");
        line.box = box_from_json(l["box"]);
        line.src_text = l["src_text"].get<std::string>();
        line.order = l["order"].get<int>();
        rec.lines.push_back(std::move(line));
    }
    rec.reference_tagged = need("reference_tagged").get<std::string>();
    rec.reference_joined = need("reference_joined").get<std::string>();

    const int n = static_cast<int>(rec.lines.size());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& line : rec.lines) {
        if (line.order < 0 || line.order >= n ||
            seen[static_cast<std::size_t>(line.order)])
            throw SchemaViolation("record " + id +
                                  ": field 'order' is not a permutation");
        seen[static_cast<std::size_t>(line.order)] = true;
    }
    if (parse_tagged(rec.reference_tagged, n, true).status != ParseStatus::CLEAN)
        throw SchemaViolation("record " + id +
                              ": field 'reference_tagged' does not parse "
                              "clean with n=" + std::to_string(n));
    if (!std::filesystem::exists(rec.image_path))
        throw MissingImage("record " + id + " references absent image " +
                           rec.image_path);
    return rec;
}

// Loads every record listed in {root}/index.json, grouped there per pair:
//   {"pairs": {"zh-en": ["records/0001.json", ...], ...}}
inline std::vector<DatasetRecord> load_mtit6(const std::string& root) {
    const auto index_path = std::filesystem::path(root) / "index.json";
    std::ifstream in(index_path);
    if (!in)
        throw SchemaViolation("dataset root has no index.json: " + root);
    nlohmann::json index;
    try {
        in >> index;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation("index.json is not valid JSON: " +
                              std::string(e.what()));
    }
    if (!index.contains("pairs") || !index["pairs"].is_object())
        throw SchemaViolation("index.json needs a 'pairs' object");
    std::vector<DatasetRecord> records;
    for (const auto& [pair_name, files] : index["pairs"].items()) {
        LanguagePair::parse(pair_name);  // validate the key
        for (const auto& f : files) {
            const auto rel = f.get<std::string>();
            const auto path = std::filesystem::path(root) / rel;
            std::ifstream rin(path);
            if (!rin)
                throw SchemaViolation("listed record file missing: " +
                                      path.string());
            nlohmann::json doc;
            try {
                rin >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw SchemaViolation("record " + rel + " is not valid JSON: " +
                                      std::string(e.what()));
            }
            auto rec = record_from_json(doc, root, path.stem().string());
            if (rec.pair.str() != pair_name)
                throw SchemaViolation("record " + rel + " pair " +
                                      rec.pair.str() +
                                      " does not match index group " +
                                      pair_name);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Tokenization (target-language-aware)
// ---------------------------------------------------------------------------

// zh/ja references tokenize per character (the community default for BLEU on
// Chinese); ko splits on whitespace; en splits on whitespace with punctuation
// as standalone tokens. Case is preserved.
inline std::vector<std::string> tokenize_for_bleu(std::string_view text,
                                                  const std::string& lang) {
    std::vector<std::string> tokens;
    const bool char_level = lang == "zh" || lang == "ja";
    const bool split_punct = lang != "ko";
    std::string cur;
    std::size_t pos = 0;
    auto flush = [&] {
        if (!cur.empty()) tokens.push_back(std::move(cur));
        cur.clear();
    };
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = next_scalar(text, pos);
        const ScriptClass s = classify_script(cp);
        if (s == ScriptClass::SPACE) {
            flush();
            continue;
        }
        if (char_level) {
            flush();
            tokens.emplace_back(text.substr(start, pos - start));
            continue;
        }
        const bool is_word = s == ScriptClass::LATIN || s == ScriptClass::DIGIT ||
                             s == ScriptClass::HANGUL;
        if (!split_punct || is_word) {
            cur += std::string(text.substr(start, pos - start));
        } else {
            flush();
            tokens.emplace_back(text.substr(start, pos - start));
        }
    }
    flush();
    return tokens;
}

// Per-image hypothesis assembly: CJK targets concatenate, spaced targets
// space-join; empty texts contribute nothing.
inline std::string join_texts(const std::vector<std::string>& texts_in_order,
                              const std::string& tgt_lang) {
    const bool concat = tgt_lang == "zh" || tgt_lang == "ja";
    std::string out;
    for (const auto& t : texts_in_order) {
        if (t.empty()) continue;
        if (!out.empty() && !concat) out += " ";
        out += t;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corpus BLEU-4
// ---------------------------------------------------------------------------

// Clipped n-gram precisions aggregated over the corpus, geometric mean over
// n=1..4, brevity penalty exp(1 - r/c) when c <= r, no smoothing: any zero
// precision gives 0.
inline double corpus_bleu_tokens(
    const std::vector<std::vector<std::string>>& hyps,
    const std::vector<std::vector<std::string>>& refs) {
    if (hyps.size() != refs.size())
        throw LengthMismatch("corpus BLEU needs equally many hypotheses and "
                             "references");
    if (hyps.empty()) throw EmptyCorpus("corpus BLEU needs at least one pair");

    double matches[4] = {0, 0, 0, 0};
    double totals[4] = {0, 0, 0, 0};
    long long hyp_len = 0, ref_len = 0;

    for (std::size_t i = 0; i < hyps.size(); ++i) {
        const auto& h = hyps[i];
        const auto& r = refs[i];
        hyp_len += static_cast<long long>(h.size());
        ref_len += static_cast<long long>(r.size());
        for (int n = 1; n <= 4; ++n) {
            if (static_cast<int>(h.size()) < n) continue;
            std::map<std::vector<std::string>, int> hyp_counts, ref_counts;
            for (std::size_t k = 0; k + n <= h.size(); ++k)
                ++hyp_counts[{h.begin() + static_cast<std::ptrdiff_t>(k),
                              h.begin() + static_cast<std::ptrdiff_t>(k + n)}];
            for (std::size_t k = 0; k + static_cast<std::size_t>(n) <= r.size(); ++k)
                ++ref_counts[{r.begin() + static_cast<std::ptrdiff_t>(k),
                              r.begin() + static_cast<std::ptrdiff_t>(k + n)}];
            for (const auto& [gram, count] : hyp_counts) {
                const auto it = ref_counts.find(gram);
                matches[n - 1] +=
                    it != ref_counts.end() ? std::min(count, it->second) : 0;
            }
            totals[n - 1] += static_cast<double>(h.size()) - n + 1;
        }
    }

    if (hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    for (int n = 0; n < 4; ++n) {
        if (totals[n] <= 0.0 || matches[n] <= 0.0) return 0.0;
        log_sum += 0.25 * std::log(matches[n] / totals[n]);
    }
    const double bp =
        hyp_len > ref_len
            ? 1.0
            : std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
    return 100.0 * bp * std::exp(log_sum);
}

inline double corpus_bleu(const std::vector<std::string>& hypotheses,
                          const std::vector<std::string>& references,
                          const std::string& lang = "en") {
    std::vector<std::vector<std::string>> h, r;
    h.reserve(hypotheses.size());
    r.reserve(references.size());
    for (const auto& s : hypotheses) h.push_back(tokenize_for_bleu(s, lang));
    for (const auto& s : references) r.push_back(tokenize_for_bleu(s, lang));
    return corpus_bleu_tokens(h, r);
}

// ---------------------------------------------------------------------------
// Spearman's rho (average ranks for ties, Pearson on ranks)
// ---------------------------------------------------------------------------

inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw LengthMismatch("spearman needs equally long lists");
    if (xs.size() < 2)
        throw DegenerateInput("spearman needs at least two samples");
    auto all_equal = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(),
                           [&](double x) { return x == v.front(); });
    };
    if (all_equal(xs) || all_equal(ys))
        throw DegenerateInput("spearman is undefined for constant input");

    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(rx.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    return cov / std::sqrt(vx * vy);
}

// ---------------------------------------------------------------------------
// I2T / I2I harnesses
// ---------------------------------------------------------------------------

namespace detail {

// Joins per-box texts following the record's corrected order. texts is keyed
// by box position (the order boxes appear in the record), values may be "".
inline std::string join_in_corrected_order(
    const DatasetRecord& rec, const std::map<int, std::string>& texts) {
    std::vector<std::string> in_order(rec.lines.size());
    for (std::size_t i = 0; i < rec.lines.size(); ++i) {
        const auto it = texts.find(static_cast<int>(i));
        in_order[static_cast<std::size_t>(rec.lines[i].order)] =
            it != texts.end() ? it->second : "";
    }
    return join_texts(in_order, rec.pair.tgt);
}

}  // namespace detail

inline std::map<std::string, double> i2t_score(
    const std::vector<DatasetRecord>& records,
    const std::vector<TranslationOutcome>& outcomes) {
    if (records.size() != outcomes.size())
        throw AlignmentError("i2t_score needs one outcome per record");
    std::map<std::string, std::vector<std::string>> hyps, refs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        hyps[rec.pair.str()].push_back(
            detail::join_in_corrected_order(rec, outcomes[i].texts));
        refs[rec.pair.str()].push_back(rec.reference_joined);
    }
    std::map<std::string, double> out;
    for (const auto& [pair, h] : hyps)
        out[pair] = corpus_bleu(h, refs[pair], LanguagePair::parse(pair).tgt);
    return out;
}

// Matches re-OCRed lines to the record's boxes by IoU (greedy maximal
// assignment, threshold 0.3); unmatched reference boxes contribute empty
// strings.
inline std::map<int, std::string> match_ocr_to_record(
    const DatasetRecord& rec, const std::vector<RecognizedLine>& recognized,
    double iou_threshold = 0.3) {
    struct Cand {
        double score;
        std::size_t rec_line;
        std::size_t ref_line;
    };
    std::vector<Cand> cands;
    for (std::size_t a = 0; a < recognized.size(); ++a)
        for (std::size_t b = 0; b < rec.lines.size(); ++b) {
            const double v =
                iou(recognized[a].box.polygon(), rec.lines[b].box.polygon());
            if (v >= iou_threshold) cands.push_back({v, a, b});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.score > b.score;
    });
    std::vector<bool> rec_used(recognized.size(), false);
    std::vector<bool> ref_used(rec.lines.size(), false);
    std::map<int, std::string> texts;
    for (const auto& c : cands) {
        if (rec_used[c.rec_line] || ref_used[c.ref_line]) continue;
        rec_used[c.rec_line] = true;
        ref_used[c.ref_line] = true;
        texts[static_cast<int>(c.ref_line)] = recognized[c.rec_line].text;
    }
    return texts;
}

inline std::map<std::string, double> i2i_score(
    const std::vector<DatasetRecord>& records,
    const std::vector<ImageDoc>& final_images, const OcrBackendRef& ocr) {
    if (records.size() != final_images.size())
        throw AlignmentError("i2i_score needs one final image per record");
    std::map<std::string, std::vector<std::string>> hyps, refs;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const auto run = run_ocr(final_images[i], ocr);
        const auto texts = match_ocr_to_record(rec, run.lines);
        hyps[rec.pair.str()].push_back(
            detail::join_in_corrected_order(rec, texts));
        refs[rec.pair.str()].push_back(rec.reference_joined);
    }
    std::map<std::string, double> out;
    for (const auto& [pair, h] : hyps)
        out[pair] = corpus_bleu(h, refs[pair], LanguagePair::parse(pair).tgt);
    return out;
}

// ---------------------------------------------------------------------------
// Optional out-of-process COMET scorer
// ---------------------------------------------------------------------------

struct CometBackend {
    std::string endpoint;  // empty: COMET column omitted
    double timeout = 60.0;
};

inline double comet_score(const CometBackend& backend, const std::string& src,
                          const std::string& mt, const std::string& ref) {
    const nlohmann::json body = {{"src", src}, {"mt", mt}, {"ref", ref}};
    const auto res = post_json(backend.endpoint, "/comet", body, backend.timeout);
    if (!res.contains("score") || !res["score"].is_number())
        throw BackendMalformed("COMET response must carry a numeric 'score'",
                               res.dump());
    return res["score"].get<double>();
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct PerImageScore {
    std::string id;
    double i2t = 0.0;
    std::optional<double> i2i;
    std::vector<std::string> issues;
};

struct EvalReport {
    std::string pair;
    int n_images = 0;
    double i2t_bleu = 0.0;
    std::optional<double> i2i_bleu;
    std::optional<double> comet;
    std::vector<PerImageScore> per_image;
    std::string config_fingerprint;
};

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per_image = nlohmann::json::array();
    for (const auto& p : r.per_image) {
        nlohmann::json item = {{"id", p.id}, {"i2t", p.i2t}, {"issues", p.issues}};
        if (p.i2i) item["i2i"] = *p.i2i;
        per_image.push_back(item);
    }
    nlohmann::json doc = {{"pair", r.pair},
                          {"n_images", r.n_images},
                          {"i2t_bleu", r.i2t_bleu},
                          {"per_image", per_image},
                          {"config_fingerprint", r.config_fingerprint}};
    if (r.i2i_bleu) doc["i2i_bleu"] = *r.i2i_bleu;
    if (r.comet) doc["comet"] = *r.comet;
    return doc;
}

// One aligned row of the human-readable table, mirroring the I2T/I2I column
// layout of the usual result tables.
inline std::string format_report_row(const std::string& name, double i2t_bleu,
                                     std::optional<double> i2i_bleu,
                                     std::optional<double> comet = std::nullopt) {
    char buf[160];
    std::string i2i = i2i_bleu ? (snprintf(buf, sizeof buf, "%8.1f", *i2i_bleu),
                                  std::string(buf))
                               : std::string(8, ' ').replace(7, 1, "-");
    std::string cm = comet ? (snprintf(buf, sizeof buf, "%8.1f", *comet),
                              std::string(buf))
                           : std::string(8, ' ').replace(7, 1, "-");
    snprintf(buf, sizeof buf, "%-28s", name.c_str());
    std::string row(buf);
    snprintf(buf, sizeof buf, "%8.1f", i2t_bleu);
    row += buf;
    row += cm;
    row += i2i;
    return row;
}

inline std::string report_to_text(const EvalReport& r) {
    std::string out;
    char buf[160];
    snprintf(buf, sizeof buf, "%-28s%8s%8s%8s\n", "pair", "I2T", "COMET", "I2I");
    out += buf;
    out += format_report_row(r.pair + " (" + std::to_string(r.n_images) +
                                 " images)",
                             r.i2t_bleu, r.i2i_bleu, r.comet);
    out += "\n";
    return out;
}

}  // namespace tati
