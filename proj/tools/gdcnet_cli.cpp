// gdcnet command-line entry points: train, eval, discrepancy, captions-import.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdcnet/caption_client.hpp"
#include "gdcnet/checkpoint.hpp"
#include "gdcnet/config.hpp"
#include "gdcnet/metrics.hpp"
#include "gdcnet/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitService = 4;

std::string resolve_run_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* root = std::getenv("GDCNET_RUN_ROOT")) {
        return std::string(root) + "/run";
    }
    return "run";
}

gdcnet::RunConfig load_config_with_overrides(const std::string& path,
                                             const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw gdcnet::ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw gdcnet::ConfigError(std::string("config parse failure: ") + e.what());
    }
    for (const auto& o : overrides) gdcnet::apply_override(doc, o);
    std::vector<std::string> defaulted;
    gdcnet::RunConfig cfg = gdcnet::parse_run_config(doc, &defaulted);
    for (const auto& key : defaulted) {
        std::cerr << "config: `" << key << "` not set, using default\n";
    }
    return cfg;
}

gdcnet::EncodedDataset load_encoded(const gdcnet::RunConfig& cfg, bool require_captions) {
    gdcnet::DatasetManifest manifest = gdcnet::load_manifest(cfg.dataset_path);
    gdcnet::SentimentLexicon lexicon;
    if (!cfg.lexicon_path.empty()) lexicon = gdcnet::SentimentLexicon::load(cfg.lexicon_path);
    gdcnet::FeatureStore store;
    const gdcnet::FeatureStore* store_ptr = nullptr;
    if (!cfg.features_path.empty()) {
        store = gdcnet::FeatureStore::load(cfg.features_path);
        store_ptr = &store;
    }
    return gdcnet::encode_dataset(manifest, cfg.dims, lexicon, store_ptr, require_captions);
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& run_dir_flag) {
    gdcnet::RunConfig cfg = load_config_with_overrides(config_path, overrides);
    const std::string run_dir = resolve_run_dir(run_dir_flag);
    gdcnet::EncodedDataset data = load_encoded(cfg, true);
    gdcnet::RunResult result = gdcnet::run_training(cfg, data, run_dir);

    const bool has_val = std::any_of(data.samples.begin(), data.samples.end(),
                                     [](const gdcnet::EncodedSample& s) {
                                         return s.split == gdcnet::Split::val;
                                     });
    if (has_val) {
        gdcnet::MetricsReport val = gdcnet::evaluate(result.best_model, data, gdcnet::Split::val,
                                                     cfg.threshold, cfg.train.ablation);
        val.config_snapshot = cfg.to_json();
        std::ofstream jout(run_dir + "/metrics/val_report.json");
        jout << gdcnet::report_to_json(val).dump(2) << '\n';
        std::ofstream tout(run_dir + "/metrics/val_report.txt");
        tout << gdcnet::report_to_text(val);
        std::cout << "best epoch " << result.best_epoch << " (val F1 " << result.best_val_f1
                  << ")\n"
                  << gdcnet::report_to_text(val);
    }
    gdcnet::Checkpoint best{result.best_model, result.best_epoch, cfg.train, result.epoch_log};
    gdcnet::save_checkpoint(best, run_dir + "/checkpoints/best.json");
    std::cout << "run directory: " << run_dir << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset_path,
             const std::string& split_name, double threshold, const std::string& lexicon_path,
             const std::string& features_path, const std::string& out_dir) {
    gdcnet::Checkpoint ckpt = gdcnet::load_checkpoint(ckpt_path);
    gdcnet::RunConfig cfg;
    cfg.train = ckpt.config;
    cfg.dims = ckpt.params.dims;
    cfg.dataset_path = dataset_path;
    cfg.lexicon_path = lexicon_path;
    cfg.features_path = features_path;
    gdcnet::EncodedDataset data = load_encoded(cfg, true);
    gdcnet::MetricsReport report =
        gdcnet::evaluate(ckpt.params, data, gdcnet::parse_split(split_name), threshold,
                         ckpt.config.ablation);
    report.config_snapshot = cfg.to_json();
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream jout(out_dir + "/report.json");
        jout << gdcnet::report_to_json(report).dump(2) << '\n';
        std::ofstream tout(out_dir + "/report.txt");
        tout << gdcnet::report_to_text(report);
        std::ofstream pout(out_dir + "/per_sample.jsonl");
        for (const auto& s : report.per_sample) {
            pout << nlohmann::json{{"id", s.id}, {"p_final", s.prob}, {"label", s.label}}.dump()
                 << '\n';
        }
    }
    std::cout << "accuracy=" << report.accuracy << " precision=" << report.precision
              << " recall=" << report.recall << " f1=" << report.f1 << "\n";
    return kExitOk;
}

int cmd_discrepancy(const std::string& config_path, const std::string& checkpoint_path,
                    const std::string& out_path) {
    gdcnet::RunConfig cfg = load_config_with_overrides(config_path, {});
    gdcnet::ModelParams model =
        checkpoint_path.empty() ? gdcnet::ModelParams::init(cfg.dims, cfg.train.seed)
                                : gdcnet::load_checkpoint(checkpoint_path).params;

    gdcnet::DatasetManifest manifest = gdcnet::load_manifest(cfg.dataset_path);
    gdcnet::SentimentLexicon lexicon;
    if (!cfg.lexicon_path.empty()) lexicon = gdcnet::SentimentLexicon::load(cfg.lexicon_path);
    gdcnet::FeatureStore store;
    const gdcnet::FeatureStore* store_ptr = nullptr;
    if (!cfg.features_path.empty()) {
        store = gdcnet::FeatureStore::load(cfg.features_path);
        store_ptr = &store;
    }

    std::vector<std::string> skipped;
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw gdcnet::DataError("cannot write output file: " + out_path);
    double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
    std::size_t n = 0;
    for (const auto& s : manifest.samples) {
        if (!s.has_caption()) {
            skipped.push_back(s.id);
            continue;
        }
        gdcnet::EmbeddingVector h_text = gdcnet::encode_text_hashed(s.text, cfg.dims.d_t);
        gdcnet::EmbeddingVector h_cap = gdcnet::encode_text_hashed(*s.caption, cfg.dims.d_t);
        gdcnet::EmbeddingVector h_img = gdcnet::encode_image_passthrough(s, store_ptr);
        gdcnet::Vec z_text = gdcnet::project(model.text_head, h_text).values;
        gdcnet::Vec z_cap = gdcnet::project(model.text_head, h_cap).values;
        gdcnet::Vec z_img = gdcnet::project(model.image_head, h_img).values;
        const double d_sem = gdcnet::semantic_discrepancy(z_text, z_cap);
        const double d_sen = gdcnet::sentiment_discrepancy(
            gdcnet::sentiment_score_lexicon(s.text, lexicon),
            gdcnet::sentiment_score_lexicon(*s.caption, lexicon));
        const double d_fid = gdcnet::fidelity(z_img, z_cap);
        gdcnet::discrepancy_vector(d_sem, d_sen, d_fid);  // range check
        out << nlohmann::json{{"id", s.id},
                              {"d_sem", d_sem},
                              {"d_sen", d_sen},
                              {"d_fidelity", d_fid}}
                   .dump()
            << '\n';
        const double vals[3] = {d_sem, d_sen, d_fid};
        for (int k = 0; k < 3; ++k) {
            sum[k] += vals[k];
            sumsq[k] += vals[k] * vals[k];
        }
        ++n;
    }
    const char* names[3] = {"d_sem", "d_sen", "d_fidelity"};
    for (int k = 0; k < 3; ++k) {
        const double mean = n ? sum[k] / n : 0.0;
        const double var = n ? std::max(0.0, sumsq[k] / n - mean * mean) : 0.0;
        std::cout << names[k] << ": mean=" << mean << " std=" << std::sqrt(var) << "\n";
    }
    if (!skipped.empty()) {
        std::cout << "skipped (missing caption):";
        for (const auto& id : skipped) std::cout << " " << id;
        std::cout << "\n";
        return kExitData;  // partial output
    }
    return kExitOk;
}

int cmd_captions_import(const std::string& dataset_path, const std::string& captions_path,
                        const std::string& endpoint, const std::string& out_path) {
    gdcnet::DatasetManifest manifest = gdcnet::load_manifest(dataset_path);
    std::vector<gdcnet::CaptionRecord> records;
    if (!captions_path.empty()) {
        std::ifstream in(captions_path);
        if (!in) throw gdcnet::DataError("cannot open captions file: " + captions_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw gdcnet::ParseError("captions line " + std::to_string(line_no) + ": " +
                                         e.what());
            }
            gdcnet::CaptionRecord r;
            r.sample_id = j.at("sample_id").get<std::string>();
            r.caption = j.at("caption").get<std::string>();
            r.generator_name = j.value("generator", "file-import");
            r.created_at = j.value("created_at", static_cast<std::int64_t>(line_no));
            records.push_back(std::move(r));
        }
    } else {
        gdcnet::CaptionClientConfig client;
        const auto colon = endpoint.rfind(':');
        if (colon == std::string::npos) {
            throw gdcnet::ConfigError("endpoint must look like host:port");
        }
        client.host = endpoint.substr(0, colon);
        client.port = std::stoi(endpoint.substr(colon + 1));
        for (const auto& s : manifest.samples) {
            if (s.has_caption()) continue;
            records.push_back(gdcnet::fetch_caption(client, s.id,
                                                    s.image_path ? *s.image_path : s.id));
        }
    }
    gdcnet::DatasetManifest updated = gdcnet::attach_captions(manifest, records);
    gdcnet::save_manifest(updated, out_path);

    std::size_t with_caption = 0, token_total = 0;
    for (const auto& s : updated.samples) {
        if (!s.has_caption()) continue;
        ++with_caption;
        bool in_tok = false;
        for (unsigned char c : *s.caption) {
            if (std::isalnum(c)) {
                if (!in_tok) ++token_total;
                in_tok = true;
            } else {
                in_tok = false;
            }
        }
    }
    std::cout << "captions attached: " << with_caption << "/" << updated.samples.size();
    if (with_caption) {
        std::cout << ", mean caption tokens: "
                  << static_cast<double>(token_total) / static_cast<double>(with_caption);
    }
    std::cout << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GDCNet: multimodal sarcasm detection via generative discrepancy comparison"};
    app.require_subcommand(1);

    std::string config_path, run_dir, ckpt_path, dataset_path, split = "test";
    std::string lexicon_path, features_path, out_dir = "eval_out", out_path;
    std::string captions_path, endpoint;
    double threshold = 0.5;
    std::vector<std::string> overrides;

    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "run config (JSON)")->required();
    train->add_option("--set", overrides, "override config keys, e.g. --set train.seed=7");
    train->add_option("--run-dir", run_dir, "run directory (default $GDCNET_RUN_ROOT/run)");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval->add_option("--checkpoint", ckpt_path)->required();
    eval->add_option("--dataset", dataset_path)->required();
    eval->add_option("--split", split, "train|val|test");
    eval->add_option("--threshold", threshold);
    eval->add_option("--lexicon", lexicon_path);
    eval->add_option("--features", features_path);
    eval->add_option("--out-dir", out_dir);

    auto* disc = app.add_subcommand("discrepancy", "dump per-sample discrepancy triples");
    disc->add_option("--config", config_path)->required();
    disc->add_option("--checkpoint", ckpt_path, "optional; fresh seeded init otherwise");
    disc->add_option("--out", out_path)->required();

    auto* imp = app.add_subcommand("captions-import", "attach captions from a file or service");
    imp->add_option("--dataset", dataset_path)->required();
    imp->add_option("--captions", captions_path, "captions JSONL file");
    imp->add_option("--endpoint", endpoint, "caption service host:port");
    imp->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train(config_path, overrides, run_dir);
        if (eval->parsed()) {
            return cmd_eval(ckpt_path, dataset_path, split, threshold, lexicon_path,
                            features_path, out_dir);
        }
        if (disc->parsed()) return cmd_discrepancy(config_path, ckpt_path, out_path);
        if (imp->parsed()) {
            if (captions_path.empty() == endpoint.empty()) {
                throw gdcnet::ConfigError("exactly one of --captions/--endpoint required");
            }
            return cmd_captions_import(dataset_path, captions_path, endpoint, out_path);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const gdcnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gdcnet::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const gdcnet::TransportError& e) {
        std::cerr << "service error: " << e.what() << "\n";
        return kExitService;
    } catch (const gdcnet::ServiceError& e) {
        std::cerr << "service error: " << e.what() << "\n";
        return kExitService;
    } catch (const gdcnet::ProtocolError& e) {
        std::cerr << "service error: " << e.what() << "\n";
        return kExitService;
    } catch (const std::exception& e) {
        // parse/integrity/data/shape/domain
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
