#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tati/config.hpp"
#include "tati/evalkit.hpp"
#include "tati/image_io.hpp"
#include "tati/mock_server.hpp"
#include "tati/pipeline.hpp"

namespace tati::cli {

namespace fs = std::filesystem;

inline std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

// Sorted-by-filename image list: deterministic batch order.
inline std::vector<std::string> collect_images(const std::string& input) {
    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            if (!e.is_regular_file()) continue;
            auto ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
                files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(input);
    }
    return files;
}

struct TranslateArgs {
    std::string input;
    std::string pair;
    std::string config;
    std::string out = "out";
    bool dump_plan = false;
    bool dump_tagged = false;
};

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write: " + path);
    f << text;
}

inline int run_translate(const TranslateArgs& args) {
    PipelineConfig cfg = load_config(args.config);
    if (!args.pair.empty()) cfg.pair = LanguagePair::parse(args.pair);
    const auto files = collect_images(args.input);
    if (files.empty()) {
        std::cerr << "translate: no input images under " << args.input << "\n";
        return 1;
    }
    fs::create_directories(args.out);

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= files.size()) return;
            try {
                const ImageDoc image = load_image(files[i]);
                const PipelineResult result = run_pipeline(image, cfg);
                const std::string stem = stem_of(files[i]);
                save_png(result.final_image,
                         (fs::path(args.out) / (stem + ".png")).string());
                if (args.dump_plan)
                    write_text_file(
                        (fs::path(args.out) / (stem + ".plan.json")).string(),
                        plan_to_json(result.plan).dump(2) + "\n");
                if (args.dump_tagged)
                    write_text_file(
                        (fs::path(args.out) / (stem + ".tagged.txt")).string(),
                        result.tagged_source.canonical_text + "\n");
                for (const auto& w : result.warnings)
                    std::cerr << stem << ": warning: " << w << "\n";
                if (result.no_text_found)
                    std::cerr << stem << ": no text found, image left unchanged\n";
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::max(
        1, std::min<int>(cfg.parallelism, static_cast<int>(files.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return 0;
}

struct EvalArgs {
    std::string dataset;
    std::string pair;
    std::string config;
    std::string out;
    bool i2i = false;
};

inline int run_eval(const EvalArgs& args) {
    PipelineConfig cfg = load_config(args.config);
    const LanguagePair pair = LanguagePair::parse(args.pair);
    cfg.pair = pair;

    auto all_records = load_mtit6(args.dataset);
    std::vector<DatasetRecord> records;
    for (auto& r : all_records)
        if (r.pair == pair) records.push_back(std::move(r));
    if (records.empty()) {
        std::cerr << "eval: dataset has no records for pair " << pair.str()
                  << "\n";
        return 1;
    }

    std::vector<TranslationOutcome> outcomes;
    std::vector<ImageDoc> finals;
    EvalReport report;
    report.pair = pair.str();
    report.n_images = static_cast<int>(records.size());
    report.config_fingerprint = cfg.fingerprint;

    for (const auto& rec : records) {
        const ImageDoc image = load_image(rec.image_path);
        std::vector<RecognizedLine> lines;
        for (const auto& l : rec.lines)
            lines.push_back({l.box, l.src_text, 1.0, l.order});
        std::vector<std::string> src_texts;
        for (const auto& l : lines) src_texts.push_back(l.text);
        const TaggedSequence tagged = serialize_tagged(src_texts);

        TranslationOutcome outcome;
        if (cfg.translation_mode == PipelineTranslationMode::PER_BOX)
            outcome = translate_per_box(lines, pair, cfg.translator,
                                        cfg.prompt_deps(),
                                        cfg.translator.accepts_image ? &image
                                                                     : nullptr);
        else
            outcome = translate_whole(tagged, pair, image, cfg.translator,
                                      cfg.prompt_deps(), cfg.strict_parsing);

        if (args.i2i) {
            const FusionPlan plan =
                plan_fusion(lines, outcome.texts, image, cfg.resize,
                            cfg.weights, cfg.renderer, cfg.ratio_mode);
            std::vector<TextBox> regions;
            for (const auto& l : lines) regions.push_back(l.box);
            const ImageDoc erased = erase_regions(
                {image, regions, cfg.erase_method}, cfg.erase_backend);
            finals.push_back(render_text(erased, plan, cfg.renderer, cfg.weights));
        }
        outcomes.push_back(std::move(outcome));
    }

    report.i2t_bleu = i2t_score(records, outcomes).at(pair.str());
    if (args.i2i)
        report.i2i_bleu = i2i_score(records, finals, cfg.ocr).at(pair.str());

    for (std::size_t i = 0; i < records.size(); ++i) {
        PerImageScore per;
        per.id = records[i].id;
        const std::string hyp = [&] {
            std::vector<std::string> in_order(records[i].lines.size());
            for (std::size_t k = 0; k < records[i].lines.size(); ++k) {
                const auto it = outcomes[i].texts.find(static_cast<int>(k));
                in_order[static_cast<std::size_t>(records[i].lines[k].order)] =
                    it != outcomes[i].texts.end() ? it->second : "";
            }
            return join_texts(in_order, pair.tgt);
        }();
        per.i2t = corpus_bleu({hyp}, {records[i].reference_joined}, pair.tgt);
        for (const auto& issue : outcomes[i].issues)
            per.issues.push_back(std::string(to_string(issue.kind)) + ": " +
                                 issue.detail);
        report.per_image.push_back(std::move(per));
    }

    if (!cfg.comet_endpoint.empty()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            std::vector<std::string> src_in_order(records[i].lines.size());
            for (const auto& l : records[i].lines)
                src_in_order[static_cast<std::size_t>(l.order)] = l.src_text;
            const std::string src = join_texts(src_in_order, pair.src);
            std::vector<std::string> hyp_in_order(records[i].lines.size());
            for (std::size_t k = 0; k < records[i].lines.size(); ++k)
                hyp_in_order[static_cast<std::size_t>(
                    records[i].lines[k].order)] =
                    outcomes[i].texts.count(static_cast<int>(k))
                        ? outcomes[i].texts.at(static_cast<int>(k))
                        : "";
            sum += comet_score({cfg.comet_endpoint, cfg.comet_timeout}, src,
                               join_texts(hyp_in_order, pair.tgt),
                               records[i].reference_joined);
        }
        report.comet = sum / static_cast<double>(records.size());
    }

    std::cout << report_to_text(report);
    if (!args.out.empty()) {
        fs::create_directories(args.out);
        write_text_file(
            (fs::path(args.out) / ("report-" + pair.str() + ".json")).string(),
            report_to_json(report).dump(2) + "\n");
    }
    return 0;
}

inline int run_erase_cmd(const std::string& input, const std::string& config,
                         const std::string& out) {
    const PipelineConfig cfg = load_config(config);
    fs::create_directories(out);
    for (const auto& file : collect_images(input)) {
        const ImageDoc image = load_image(file);
        const OcrRun ocr = run_ocr(image, cfg.ocr);
        std::vector<TextBox> regions;
        for (const auto& l : ocr.lines) regions.push_back(l.box);
        const ImageDoc erased =
            erase_regions({image, regions, cfg.erase_method}, cfg.erase_backend);
        save_png(erased,
                 (fs::path(out) / (stem_of(file) + ".erased.png")).string());
    }
    return 0;
}

inline int run_render_cmd(const std::string& input, const std::string& plan_path,
                          const std::string& config, const std::string& out) {
    const PipelineConfig cfg = load_config(config);
    std::ifstream in(plan_path);
    if (!in) throw ConfigError("cannot open plan: " + plan_path);
    nlohmann::json doc;
    in >> doc;
    const FusionPlan plan = plan_from_json(doc);
    fs::create_directories(out);
    const ImageDoc image = load_image(input);
    const ImageDoc rendered = render_text(image, plan, cfg.renderer, cfg.weights);
    save_png(rendered,
             (fs::path(out) / (stem_of(input) + ".rendered.png")).string());
    return 0;
}

inline int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Training-free text-in-image translation pipeline"};
    app.require_subcommand(1);

    const char* env_config = std::getenv("TATI_CONFIG");
    const std::string default_config = env_config ? env_config : "";

    TranslateArgs targs;
    targs.config = default_config;
    auto* translate = app.add_subcommand(
        "translate", "Translate all text in an image (or directory of images)");
    translate->add_option("--input", targs.input, "Image file or directory")
        ->required();
    translate->add_option("--pair", targs.pair, "Language pair, e.g. zh-en");
    auto* topt = translate->add_option("--config", targs.config,
                                       "Pipeline config JSON");
    if (default_config.empty()) topt->required();
    translate->add_option("--out", targs.out, "Output directory");
    translate->add_flag("--dump-plan", targs.dump_plan,
                        "Write the fusion plan JSON per image");
    translate->add_flag("--dump-tagged", targs.dump_tagged,
                        "Write the tagged source per image");

    EvalArgs eargs;
    eargs.config = default_config;
    auto* eval = app.add_subcommand("eval", "Score a dataset (I2T, optional I2I)");
    eval->add_option("--dataset", eargs.dataset, "Dataset root with index.json")
        ->required();
    eval->add_option("--pair", eargs.pair, "Language pair to evaluate")
        ->required();
    auto* eopt = eval->add_option("--config", eargs.config,
                                  "Pipeline config JSON");
    if (default_config.empty()) eopt->required();
    eval->add_option("--out", eargs.out, "Directory for the JSON report");
    eval->add_flag("--i2i", eargs.i2i,
                   "Also render final images and score them via re-OCR");

    int port = 8080;
    std::string script_path;
    auto* mock = app.add_subcommand(
        "mock-serve", "Serve the ocr/translate/erase/render wire contracts "
                      "from a script file");
    mock->add_option("--port", port, "Port to listen on")->required();
    mock->add_option("--script", script_path, "Mock script JSON")->required();

    std::string in_path, out_dir = "out", plan_path, config_path = default_config;
    auto* erase = app.add_subcommand("erase", "Run OCR and erase only");
    erase->add_option("--input", in_path, "Image file or directory")->required();
    auto* ecfg = erase->add_option("--config", config_path, "Pipeline config");
    if (default_config.empty()) ecfg->required();
    erase->add_option("--out", out_dir, "Output directory");

    std::string r_in, r_out = "out", r_config = default_config;
    auto* render = app.add_subcommand("render", "Render a fusion plan only");
    render->add_option("--input", r_in, "Erased image")->required();
    render->add_option("--plan", plan_path, "Fusion plan JSON")->required();
    auto* rcfg = render->add_option("--config", r_config, "Pipeline config");
    if (default_config.empty()) rcfg->required();
    render->add_option("--out", r_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (translate->parsed()) return run_translate(targs);
        if (eval->parsed()) return run_eval(eargs);
        if (mock->parsed()) {
            std::ifstream in(script_path);
            if (!in) throw ConfigError("cannot open script: " + script_path);
            nlohmann::json script;
            in >> script;
            MockServer server(script);
            std::cout << "mock-serve listening on port " << port << "\n";
            if (!server.serve(port))
                throw Error("could not bind port " + std::to_string(port));
            return 0;
        }
        if (erase->parsed()) return run_erase_cmd(in_path, config_path, out_dir);
        if (render->parsed())
            return run_render_cmd(r_in, plan_path, r_config, r_out);
    } catch (const StageError& e) {
        std::cerr << stage << ": stage '" << e.stage << "' failed: " << e.what()
                  << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << stage << " failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << stage << " failed: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace tati::cli
