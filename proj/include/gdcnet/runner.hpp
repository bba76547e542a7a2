#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "gdcnet/checkpoint.hpp"
#include "gdcnet/config.hpp"
#include "gdcnet/metrics.hpp"
#include "gdcnet/train.hpp"

namespace gdcnet {

struct RunResult {
    ModelParams model;              // final-epoch parameters
    ModelParams best_model;         // best val-F1 epoch
    std::size_t best_epoch = 0;
    double best_val_f1 = -1.0;
    nlohmann::json epoch_log = nlohmann::json::array();
    std::vector<double> all_postclip_norms;
};

// Full training run: per-epoch train + val evaluation, checkpointing the
// best-F1 epoch. `run_dir` empty means no files are written.
inline RunResult run_training(const RunConfig& cfg, const EncodedDataset& data,
                              const std::string& run_dir = "") {
    cfg.train.validate();
    ModelParams model = ModelParams::init(cfg.dims, cfg.train.seed);
    AdamOptimizer opt(cfg.train.lr_task, cfg.train.weight_decay);

    RunResult result;
    const bool has_val = std::any_of(data.samples.begin(), data.samples.end(),
                                     [](const EncodedSample& s) { return s.split == Split::val; });

    std::ofstream epoch_log_file;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir + "/checkpoints");
        std::filesystem::create_directories(run_dir + "/metrics");
        std::filesystem::create_directories(run_dir + "/logs");
        std::ofstream cfg_out(run_dir + "/resolved_config.json");
        cfg_out << cfg.to_json().dump(2) << '\n';
        epoch_log_file.open(run_dir + "/metrics/epoch_metrics.jsonl");
    }

    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        EpochStats stats = train_epoch(model, opt, data, cfg.train, epoch);
        result.all_postclip_norms.insert(result.all_postclip_norms.end(),
                                         stats.postclip_grad_norms.begin(),
                                         stats.postclip_grad_norms.end());
        nlohmann::json entry{{"epoch", epoch}, {"mean_loss", stats.mean_loss}};
        if (has_val) {
            MetricsReport val = evaluate(model, data, Split::val, cfg.threshold,
                                         cfg.train.ablation, false);
            entry["val"] = report_to_json(val);
            if (val.f1 > result.best_val_f1) {
                result.best_val_f1 = val.f1;
                result.best_epoch = epoch;
                result.best_model = model;
            }
        }
        result.epoch_log.push_back(entry);
        if (epoch_log_file.is_open()) epoch_log_file << entry.dump() << '\n';
        if (!run_dir.empty()) {
            Checkpoint ckpt{model, epoch, cfg.train, result.epoch_log};
            save_checkpoint(ckpt, run_dir + "/checkpoints/epoch_" + std::to_string(epoch) + ".json");
        }
    }
    if (!has_val) result.best_model = model;
    result.model = model;
    return result;
}

}  // namespace gdcnet
