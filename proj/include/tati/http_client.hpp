#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "tati/errors.hpp"

namespace tati {

// POSTs JSON to {endpoint}{path} and returns the parsed JSON response.
// Transport failures are retried twice with a doubled timeout each attempt
// before giving up with BackendUnreachable; a 2xx body that fails to parse
// is BackendMalformed and is not retried.
inline nlohmann::json post_json(const std::string& endpoint,
                                const std::string& path,
                                const nlohmann::json& body,
                                double timeout_seconds, int retries = 2) {
    const std::string payload = body.dump();
    std::string last_error;
    double timeout = timeout_seconds;
    for (int attempt = 0; attempt <= retries; ++attempt, timeout *= 2.0) {
        httplib::Client client(endpoint);
        const auto usec = std::chrono::microseconds(
            static_cast<long long>(std::max(timeout, 0.001) * 1e6));
        client.set_connection_timeout(usec);
        client.set_read_timeout(usec);
        client.set_write_timeout(usec);
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status >= 500) continue;  // server hiccup: retry
            throw BackendUnreachable(
                endpoint + path + " failed: " + last_error, res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendMalformed(
                endpoint + path + " returned unparsable JSON: " + e.what(),
                res->body);
        }
    }
    throw BackendUnreachable(endpoint + path + " unreachable after " +
                                 std::to_string(retries + 1) + " attempts: " +
                                 last_error,
                             last_error);
}

}  // namespace tati
