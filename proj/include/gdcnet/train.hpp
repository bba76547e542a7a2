#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdcnet/data.hpp"
#include "gdcnet/model.hpp"
#include "gdcnet/sentiment.hpp"

namespace gdcnet {

struct TrainConfig {
    double alpha = 0.1;
    double margin = 0.2;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double lr_task = 5e-4;
    double lr_backbone = 1e-6;
    double weight_decay = 0.05;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 42;
    AblationFlags ablation;

    void validate() const {
        if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (contrastive loss needs in-batch negatives)");
        if (margin <= 0.0) throw ConfigError("margin must be positive");
        if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
        if (grad_clip_norm <= 0.0) throw ConfigError("grad_clip_norm must be positive");
    }
};

inline AblationFlags parse_ablation_flags(const std::vector<std::string>& names) {
    AblationFlags f;
    for (const auto& n : names) {
        if (n == "no_gdrm") f.no_gdrm = true;
        else if (n == "no_semd") f.no_semd = true;
        else if (n == "no_send") f.no_send = true;
        else if (n == "symmetric_contrastive") f.symmetric_contrastive = true;
        else throw ConfigError("unknown ablation flag: " + n);
    }
    return f;
}

inline std::vector<std::string> ablation_names(const AblationFlags& f) {
    std::vector<std::string> out;
    if (f.no_gdrm) out.push_back("no_gdrm");
    if (f.no_semd) out.push_back("no_semd");
    if (f.no_send) out.push_back("no_send");
    if (f.symmetric_contrastive) out.push_back("symmetric_contrastive");
    return out;
}

// Ablations mask components of an existing model; nothing is retrained
// or restructured.
inline AblationFlags apply_ablation(const AblationFlags& base,
                                    const std::vector<std::string>& names) {
    AblationFlags f = parse_ablation_flags(names);
    f.no_gdrm |= base.no_gdrm;
    f.no_semd |= base.no_semd;
    f.no_send |= base.no_send;
    f.symmetric_contrastive |= base.symmetric_contrastive;
    return f;
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{
        {"alpha", c.alpha},
        {"margin", c.margin},
        {"batch_size", c.batch_size},
        {"epochs", c.epochs},
        {"lr_task", c.lr_task},
        {"lr_backbone", c.lr_backbone},
        {"weight_decay", c.weight_decay},
        {"grad_clip_norm", c.grad_clip_norm},
        {"seed", c.seed},
        {"ablation", ablation_names(c.ablation)},
    };
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.alpha = j.at("alpha").get<double>();
    c.margin = j.at("margin").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.lr_task = j.at("lr_task").get<double>();
    c.lr_backbone = j.at("lr_backbone").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.ablation = parse_ablation_flags(j.at("ablation").get<std::vector<std::string>>());
}

// Hashed text features and lexicon sentiments are fixed per sample, so
// they are computed once up front. Image vectors pass through as stored.
struct EncodedSample {
    std::string id;
    Vec h_text;
    Vec h_caption;
    Vec h_image;
    double d_sen = 0.0;
    double label = 0.0;
    Split split = Split::train;
};

struct EncodedDataset {
    std::vector<EncodedSample> samples;
    Dims dims;
};

inline EncodedDataset encode_dataset(const DatasetManifest& manifest, const Dims& dims,
                                     const SentimentLexicon& lexicon,
                                     const FeatureStore* store = nullptr,
                                     bool require_captions = true) {
    EncodedDataset out;
    out.dims = dims;
    for (const auto& s : manifest.samples) {
        if (!s.has_caption()) {
            if (require_captions) {
                throw DataError("sample `" + s.id + "` has no caption attached");
            }
            continue;
        }
        EncodedSample e;
        e.id = s.id;
        e.h_text = encode_text_hashed(s.text, dims.d_t).values;
        e.h_caption = encode_text_hashed(*s.caption, dims.d_t).values;
        Vec img = encode_image_passthrough(s, store).values;
        if (img.size() != dims.d_v) {
            throw DataError("sample `" + s.id + "`: image feature dimension " +
                            std::to_string(img.size()) + " != configured d_v " +
                            std::to_string(dims.d_v));
        }
        e.h_image = std::move(img);
        e.d_sen = sentiment_discrepancy(sentiment_score_lexicon(s.text, lexicon),
                                        sentiment_score_lexicon(*s.caption, lexicon));
        e.label = static_cast<double>(s.label);
        e.split = s.split;
        out.samples.push_back(std::move(e));
    }
    return out;
}

inline BatchInput assemble_batch(const EncodedDataset& data, const std::vector<std::size_t>& idx) {
    BatchInput in;
    for (std::size_t i : idx) {
        const EncodedSample& e = data.samples[i];
        in.h_text.push_back(e.h_text);
        in.h_caption.push_back(e.h_caption);
        in.h_image.push_back(e.h_image);
        in.d_sen.push_back(e.d_sen);
        in.labels.push_back(e.label);
    }
    return in;
}

inline std::vector<Batch> split_batches(const EncodedDataset& data, Split split,
                                        std::size_t batch_size, std::uint64_t seed,
                                        std::uint64_t epoch) {
    if (batch_size < 2) {
        throw ConfigError("batch_size must be >= 2 (contrastive loss needs in-batch negatives)");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (data.samples[i].split == split) idx.push_back(i);
    }
    if (idx.empty()) throw ConfigError("split `" + split_name(split) + "` is empty");
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + epoch + 1);
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, idx.size());
        batches.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return batches;
}

struct EpochStats {
    std::vector<double> batch_losses;
    std::vector<double> preclip_grad_norms;
    std::vector<double> postclip_grad_norms;
    double mean_loss = 0.0;
};

inline EpochStats train_epoch(ModelParams& model, AdamOptimizer& opt,
                              const EncodedDataset& data, const TrainConfig& cfg,
                              std::uint64_t epoch) {
    cfg.validate();
    const auto batches = split_batches(data, Split::train, cfg.batch_size, cfg.seed, epoch);
    EpochStats stats;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        const BatchInput in = assemble_batch(data, batches[bi]);
        ForwardCache cache = forward_batch(model, in, cfg.ablation, cfg.alpha, cfg.margin);
        if (!std::isfinite(cache.loss_total)) {
            throw NumericError("non-finite loss in epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(bi));
        }
        ModelParams grads = backward_batch(model, cache, in, cfg.ablation, cfg.alpha, cfg.margin);
        const double pre = clip_gradients(grads, cfg.grad_clip_norm);
        double post_sq = 0.0;
        grads.visit([&](const std::string&, const Vec& v) {
            for (double x : v) post_sq += x * x;
        });
        stats.batch_losses.push_back(cache.loss_total);
        stats.preclip_grad_norms.push_back(pre);
        stats.postclip_grad_norms.push_back(std::sqrt(post_sq));
        opt.step(model, grads);
    }
    double acc = 0.0;
    for (double l : stats.batch_losses) acc += l;
    stats.mean_loss = stats.batch_losses.empty() ? 0.0 : acc / stats.batch_losses.size();
    return stats;
}

}  // namespace gdcnet
