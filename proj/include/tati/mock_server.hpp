#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tati/boxtag.hpp"
#include "tati/fusion.hpp"
#include "tati/image_io.hpp"
#include "tati/ocr.hpp"
#include "tati/translate.hpp"

namespace tati {

// Serves the four wire contracts (/ocr, /translate, /erase, /render) from a
// scripted fixture file, so a fully remote configuration can run against a
// deterministic in-process backend. Script schema:
//
//   {
//     "ocr":       {"fallback": "empty", "images": {"<stem>|px:<hex>|*": [lines]}},
//     "translate": {"mode": "identity"|"table"|"raw_queue",
//                   "table": {...}, "raw": [...]},
//     "erase":     {"mode": "solid_fill"},
//     "render":    {"mode": "fallback_raster"}
//   }
//
// erase and render are implemented with the library's own deterministic
// local methods, which makes an all-remote run bit-identical to an all-mock
// one.

// Pulls the tagged input back out of a prompt built by build_prompt. The
// default template ends with "Input: <tagged>\nOutput:"; identity and table
// modes rely on that shape.
inline std::string extract_tagged_input(const std::string& prompt) {
    const std::string marker = "Input: ";
    const auto pos = prompt.rfind(marker);
    if (pos == std::string::npos) return {};
    auto end = prompt.find("\nOutput:", pos);
    if (end == std::string::npos) end = prompt.size();
    return prompt.substr(pos + marker.size(), end - pos - marker.size());
}

class MockServer {
public:
    explicit MockServer(nlohmann::json script) : script_(std::move(script)) {
        if (script_.contains("ocr"))
            ocr_script_ = MockOcrScript::from_json(script_["ocr"]);
        if (script_.contains("translate")) {
            const auto& t = script_["translate"];
            translate_mode_ = t.value("mode", std::string("identity"));
            if (t.contains("table"))
                for (const auto& [k, v] : t["table"].items())
                    table_[k] = v.get<std::string>();
            if (t.contains("raw"))
                for (const auto& r : t["raw"])
                    raw_.push_back(r.get<std::string>());
        }
        install_routes();
    }

    // Binds an ephemeral port and serves in the background. Returns the port.
    int start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw Error("mock server could not bind a port");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    // Blocking variant for the CLI subcommand.
    bool serve(int port) { return server_.listen("0.0.0.0", port); }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~MockServer() { stop(); }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    int requests_served() const { return requests_.load(); }

private:
    void install_routes() {
        server_.Post("/ocr", [this](const httplib::Request& req,
                                    httplib::Response& res) {
            ++requests_;
            handle_json(req, res, [this](const nlohmann::json& body) {
                const ImageDoc img =
                    image_from_b64(body.at("image_b64").get<std::string>());
                const auto* lines = detail::lookup_script(ocr_script_, img);
                if (!lines) {
                    if (ocr_script_.fallback == MockFallback::ERROR)
                        throw BackendUnreachable("no scripted OCR answer");
                    return nlohmann::json{{"lines", nlohmann::json::array()}};
                }
                return lines_to_json(*lines);
            });
        });

        server_.Post("/translate", [this](const httplib::Request& req,
                                          httplib::Response& res) {
            ++requests_;
            handle_json(req, res, [this](const nlohmann::json& body) {
                const auto prompt = body.at("prompt").get<std::string>();
                return nlohmann::json{{"text", translate(prompt)}};
            });
        });

        server_.Post("/erase", [this](const httplib::Request& req,
                                      httplib::Response& res) {
            ++requests_;
            handle_json(req, res, [](const nlohmann::json& body) {
                const ImageDoc img =
                    image_from_b64(body.at("image_b64").get<std::string>());
                std::vector<TextBox> regions;
                for (const auto& r : body.at("regions"))
                    regions.push_back(box_from_json(r));
                const ImageDoc out = erase_solid_fill(img, regions);
                return nlohmann::json{{"image_b64", image_to_b64(out)}};
            });
        });

        server_.Post("/render", [this](const httplib::Request& req,
                                       httplib::Response& res) {
            ++requests_;
            handle_json(req, res, [](const nlohmann::json& body) {
                ImageDoc img =
                    image_from_b64(body.at("image_b64").get<std::string>());
                FusionPlan plan;
                for (const auto& job : body.at("jobs")) {
                    FusionEntry e;
                    e.target_box = box_from_json(job.at("box"));
                    e.target_text = job.at("text").get<std::string>();
                    if (job.contains("lines"))
                        for (const auto& l : job["lines"])
                            e.lines_split.push_back(l.get<std::string>());
                    if (e.lines_split.empty() && !e.target_text.empty())
                        e.lines_split.push_back(e.target_text);
                    e.route = RenderRoute::FALLBACK;
                    plan.entries.push_back(std::move(e));
                }
                RenderBackendRef local;  // FALLBACK_RASTER
                const ImageDoc out = render_text(img, plan, local);
                return nlohmann::json{{"image_b64", image_to_b64(out)}};
            });
        });
    }

    template <typename Fn>
    static void handle_json(const httplib::Request& req, httplib::Response& res,
                            Fn&& fn) {
        try {
            const auto body = nlohmann::json::parse(req.body);
            res.set_content(fn(body).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(),
                            "application/json");
        }
    }

    std::string translate(const std::string& prompt) {
        if (translate_mode_ == "raw_queue") {
            std::lock_guard<std::mutex> lock(mutex_);
            if (raw_.empty())
                throw BackendUnreachable("scripted responses exhausted");
            std::string r = raw_.front();
            raw_.erase(raw_.begin());
            return r;
        }
        const std::string input = extract_tagged_input(prompt);
        if (translate_mode_ == "identity") return input;
        if (translate_mode_ == "table") {
            int n = 0;
            for (const auto& tok : detail::tokenize(input))
                if (tok.kind == detail::Token::OPEN) ++n;
            const auto parsed = parse_tagged(input, n, false);
            std::vector<std::string> out(static_cast<std::size_t>(n));
            for (const auto& [idx, text] : parsed.texts) {
                const auto it = table_.find(text);
                out[static_cast<std::size_t>(idx)] =
                    it != table_.end() ? it->second : text;
            }
            return serialize_tagged(out).canonical_text;
        }
        throw ConfigError("unknown mock translate mode: " + translate_mode_);
    }

    nlohmann::json script_;
    MockOcrScript ocr_script_;
    std::string translate_mode_ = "identity";
    std::map<std::string, std::string> table_;
    std::vector<std::string> raw_;
    std::mutex mutex_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> requests_{0};
};

}  // namespace tati
