#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdcnet/errors.hpp"
#include "gdcnet/model.hpp"
#include "gdcnet/train.hpp"

namespace gdcnet {

// Resolved run configuration: training hyperparameters, model dims, and
// input/output paths. Unknown keys are rejected; missing keys fall back
// to the published defaults and are logged by the CLI.
struct RunConfig {
    TrainConfig train;
    Dims dims;
    std::string dataset_path;
    std::string lexicon_path;
    std::string features_path;       // optional stored-feature file
    std::string caption_endpoint;    // host:port, optional
    double threshold = 0.5;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["train"] = train;
        j["dims"] = {{"d_t", dims.d_t},       {"d_v", dims.d_v},
                     {"d_z", dims.d_z},       {"mlp_hidden", dims.mlp_hidden},
                     {"d_f", dims.d_f},       {"d_fused", dims.d_fused},
                     {"head_hidden", dims.head_hidden}};
        j["paths"] = {{"dataset", dataset_path},
                      {"lexicon", lexicon_path},
                      {"features", features_path},
                      {"caption_endpoint", caption_endpoint}};
        j["threshold"] = threshold;
        return j;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown config key: " + scope + it.key());
        }
    }
}

}  // namespace detail

// Parse a config document; `defaulted` collects the keys that were filled
// from defaults so the caller can log them.
inline RunConfig parse_run_config(const nlohmann::json& j,
                                  std::vector<std::string>* defaulted = nullptr) {
    RunConfig cfg;
    auto note = [&](const std::string& key) {
        if (defaulted) defaulted->push_back(key);
    };
    detail::check_keys(j, {"train", "dims", "paths", "threshold"}, "");

    if (j.contains("train")) {
        const auto& t = j["train"];
        detail::check_keys(t, {"alpha", "margin", "batch_size", "epochs", "lr_task",
                               "lr_backbone", "weight_decay", "grad_clip_norm", "seed",
                               "ablation"}, "train.");
        auto get = [&](const char* key, auto& field) {
            if (t.contains(key)) field = t[key].template get<std::decay_t<decltype(field)>>();
            else note(std::string("train.") + key);
        };
        get("alpha", cfg.train.alpha);
        get("margin", cfg.train.margin);
        get("batch_size", cfg.train.batch_size);
        get("epochs", cfg.train.epochs);
        get("lr_task", cfg.train.lr_task);
        get("lr_backbone", cfg.train.lr_backbone);
        get("weight_decay", cfg.train.weight_decay);
        get("grad_clip_norm", cfg.train.grad_clip_norm);
        get("seed", cfg.train.seed);
        if (t.contains("ablation")) {
            cfg.train.ablation =
                parse_ablation_flags(t["ablation"].get<std::vector<std::string>>());
        } else {
            note("train.ablation");
        }
    } else {
        note("train");
    }

    if (j.contains("dims")) {
        const auto& d = j["dims"];
        detail::check_keys(d, {"d_t", "d_v", "d_z", "mlp_hidden", "d_f", "d_fused",
                               "head_hidden"}, "dims.");
        auto get = [&](const char* key, std::size_t& field) {
            if (d.contains(key)) field = d[key].get<std::size_t>();
            else note(std::string("dims.") + key);
        };
        get("d_t", cfg.dims.d_t);
        get("d_v", cfg.dims.d_v);
        get("d_z", cfg.dims.d_z);
        get("mlp_hidden", cfg.dims.mlp_hidden);
        get("d_f", cfg.dims.d_f);
        get("d_fused", cfg.dims.d_fused);
        get("head_hidden", cfg.dims.head_hidden);
    } else {
        note("dims");
    }

    if (j.contains("paths")) {
        const auto& p = j["paths"];
        detail::check_keys(p, {"dataset", "lexicon", "features", "caption_endpoint"}, "paths.");
        cfg.dataset_path = p.value("dataset", "");
        cfg.lexicon_path = p.value("lexicon", "");
        cfg.features_path = p.value("features", "");
        cfg.caption_endpoint = p.value("caption_endpoint", "");
    }
    if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
    else note("threshold");

    cfg.train.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path,
                                 std::vector<std::string>* defaulted = nullptr) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    return parse_run_config(j, defaulted);
}

// `--set a.b.c=value` overrides applied to the raw document before parsing.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like key=value: " + assignment);
    }
    const std::string keypath = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        const auto dotpos = keypath.find('.', start);
        if (dotpos == std::string::npos) {
            parts.push_back(keypath.substr(start));
            break;
        }
        parts.push_back(keypath.substr(start, dotpos - start));
        start = dotpos + 1;
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    // Bare words become strings; valid JSON literals keep their type.
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    // `ablation=no_gdrm` means a one-flag list.
    if (parts.back() == "ablation" && parsed.is_string()) {
        parsed = nlohmann::json::array({parsed.get<std::string>()});
    }
    (*node)[parts.back()] = parsed;
}

}  // namespace gdcnet
