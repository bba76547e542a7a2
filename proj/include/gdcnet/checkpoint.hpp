#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gdcnet/model.hpp"
#include "gdcnet/train.hpp"

namespace gdcnet {

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
    ModelParams params;
    std::size_t epoch = 0;
    TrainConfig config;
    nlohmann::json metric_history = nlohmann::json::array();
};

namespace detail {

// float64 values are stored as 16-hex-digit IEEE-754 words so the
// round trip is bit-exact regardless of the decimal formatter.
inline std::string doubles_to_hex(const Vec& v) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(v.size() * 16);
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        for (int shift = 60; shift >= 0; shift -= 4) {
            out.push_back(digits[(bits >> shift) & 0xf]);
        }
    }
    return out;
}

inline Vec hex_to_doubles(const std::string& s) {
    if (s.size() % 16 != 0) throw ParseError("checkpoint: malformed tensor payload");
    Vec out(s.size() / 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < 16; ++k) {
            const char c = s[i * 16 + k];
            std::uint64_t d;
            if (c >= '0' && c <= '9') d = static_cast<std::uint64_t>(c - '0');
            else if (c >= 'a' && c <= 'f') d = static_cast<std::uint64_t>(c - 'a' + 10);
            else throw ParseError("checkpoint: malformed tensor payload");
            bits = (bits << 4) | d;
        }
        std::memcpy(&out[i], &bits, 8);
    }
    return out;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["schema_version"] = kCheckpointSchemaVersion;
    j["epoch"] = ckpt.epoch;
    j["config"] = ckpt.config;
    j["metric_history"] = ckpt.metric_history;
    j["dims"] = {
        {"d_t", ckpt.params.dims.d_t},       {"d_v", ckpt.params.dims.d_v},
        {"d_z", ckpt.params.dims.d_z},       {"mlp_hidden", ckpt.params.dims.mlp_hidden},
        {"d_f", ckpt.params.dims.d_f},       {"d_fused", ckpt.params.dims.d_fused},
        {"head_hidden", ckpt.params.dims.head_hidden},
    };
    nlohmann::json tensors = nlohmann::json::object();
    ckpt.params.visit([&](const std::string& name, const Vec& v) {
        tensors[name] = {{"size", v.size()}, {"f64_hex", detail::doubles_to_hex(v)}};
    });
    j["tensors"] = tensors;
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") ||
        j["schema_version"].get<int>() != kCheckpointSchemaVersion) {
        throw ParseError("checkpoint schema_version mismatch (expected " +
                         std::to_string(kCheckpointSchemaVersion) + ")");
    }
    Checkpoint ckpt;
    ckpt.epoch = j.at("epoch").get<std::size_t>();
    ckpt.config = j.at("config").get<TrainConfig>();
    ckpt.metric_history = j.value("metric_history", nlohmann::json::array());
    Dims dims;
    const auto& dj = j.at("dims");
    dims.d_t = dj.at("d_t").get<std::size_t>();
    dims.d_v = dj.at("d_v").get<std::size_t>();
    dims.d_z = dj.at("d_z").get<std::size_t>();
    dims.mlp_hidden = dj.at("mlp_hidden").get<std::size_t>();
    dims.d_f = dj.at("d_f").get<std::size_t>();
    dims.d_fused = dj.at("d_fused").get<std::size_t>();
    dims.head_hidden = dj.at("head_hidden").get<std::size_t>();
    ckpt.params = ModelParams::init(dims, 0);
    const auto& tensors = j.at("tensors");
    ckpt.params.visit([&](const std::string& name, Vec& v) {
        if (!tensors.contains(name)) throw ParseError("checkpoint: missing tensor " + name);
        Vec loaded = detail::hex_to_doubles(tensors[name].at("f64_hex").get<std::string>());
        if (loaded.size() != v.size()) {
            throw ParseError("checkpoint: tensor " + name + " has wrong size");
        }
        v = std::move(loaded);
    });
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << checkpoint_to_json(ckpt).dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint parse failure: ") + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace gdcnet
