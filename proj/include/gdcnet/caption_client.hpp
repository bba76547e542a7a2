#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "gdcnet/data.hpp"
#include "gdcnet/errors.hpp"

namespace gdcnet {

struct CaptionClientConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    int timeout_seconds = 10;
    int retries = 2;
};

// POST /caption with {"id", "image_path"}; expects {"caption", "generator"}.
inline CaptionRecord fetch_caption(const CaptionClientConfig& cfg, const std::string& sample_id,
                                   const std::string& image_path) {
    httplib::Client client(cfg.host, cfg.port);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    nlohmann::json req{{"id", sample_id}, {"image_path", image_path}};
    const std::string body = req.dump();

    httplib::Result res;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        res = client.Post("/caption", body, "application/json");
        if (res) break;
    }
    if (!res) {
        throw TransportError("caption service unreachable at " + cfg.host + ":" +
                             std::to_string(cfg.port));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ServiceError(res->status, res->body);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError("caption service returned non-JSON body");
    }
    if (!j.contains("caption") || !j["caption"].is_string()) {
        throw ProtocolError("caption service response missing `caption`");
    }
    const std::string caption = j["caption"].get<std::string>();
    if (caption.empty()) {
        throw ProtocolError("caption service returned an empty caption for sample " + sample_id);
    }
    CaptionRecord rec;
    rec.sample_id = sample_id;
    rec.caption = caption;
    rec.generator_name = j.value("generator", "unknown");
    rec.created_at = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    return rec;
}

}  // namespace gdcnet
