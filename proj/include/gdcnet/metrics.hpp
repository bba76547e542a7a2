#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdcnet/model.hpp"
#include "gdcnet/train.hpp"

namespace gdcnet {

struct PerSample {
    std::string id;
    double prob = 0.0;
    int label = 0;
};

struct MetricsReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    double macro_f1 = 0.0;
    bool degenerate = false;  // some denominator was zero
    double threshold = 0.5;
    std::string split;
    nlohmann::json config_snapshot;
    std::vector<PerSample> per_sample;

    std::size_t total() const { return tp + fp + tn + fn; }
};

// Binary metrics on the positive (sarcastic) class; macro-F1 emitted
// alongside since the benchmark tables do not state the averaging.
inline MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn,
                                         std::size_t fn) {
    MetricsReport r;
    r.tp = tp; r.fp = fp; r.tn = tn; r.fn = fn;
    const std::size_t total = tp + fp + tn + fn;
    r.accuracy = total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp == 0) { r.precision = 0.0; r.degenerate = true; }
    else r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn == 0) { r.recall = 0.0; r.degenerate = true; }
    else r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall == 0.0) { r.f1 = 0.0; r.degenerate = true; }
    else r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);

    // macro: average F1 of the positive and negative classes
    double p_neg = (tn + fn) == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fn);
    double r_neg = (tn + fp) == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
    double f1_neg = (p_neg + r_neg) == 0.0 ? 0.0 : 2.0 * p_neg * r_neg / (p_neg + r_neg);
    r.macro_f1 = 0.5 * (r.f1 + f1_neg);
    return r;
}

inline MetricsReport evaluate(const ModelParams& model, const EncodedDataset& data,
                              Split split, double threshold,
                              const AblationFlags& flags = {},
                              bool keep_per_sample = true) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<PerSample> per_sample;
    bool any = false;
    for (const auto& e : data.samples) {
        if (e.split != split) continue;
        any = true;
        BatchInput in;
        in.h_text.push_back(e.h_text);
        in.h_caption.push_back(e.h_caption);
        in.h_image.push_back(e.h_image);
        in.d_sen.push_back(e.d_sen);
        in.labels.push_back(e.label);
        ForwardCache c = forward_batch(model, in, flags, 0.0, 0.2);
        const double p = c.probs[0];
        const int pred = p >= threshold ? 1 : 0;
        const int label = static_cast<int>(e.label);
        if (pred == 1 && label == 1) ++tp;
        else if (pred == 1 && label == 0) ++fp;
        else if (pred == 0 && label == 0) ++tn;
        else ++fn;
        if (keep_per_sample) per_sample.push_back({e.id, p, label});
    }
    if (!any) throw ConfigError("split `" + split_name(split) + "` is empty");
    MetricsReport r = metrics_from_counts(tp, fp, tn, fn);
    r.threshold = threshold;
    r.split = split_name(split);
    r.per_sample = std::move(per_sample);
    return r;
}

struct MetricDelta {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0, macro_f1 = 0.0;
};

inline MetricDelta compare_reports(const MetricsReport& a, const MetricsReport& b) {
    if (a.split != b.split || a.threshold != b.threshold) {
        throw ConfigError("compare_reports: reports differ in split or threshold");
    }
    return MetricDelta{a.accuracy - b.accuracy, a.precision - b.precision,
                       a.recall - b.recall, a.f1 - b.f1, a.macro_f1 - b.macro_f1};
}

inline nlohmann::json report_to_json(const MetricsReport& r, bool include_per_sample = false) {
    nlohmann::json j{
        {"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn},
        {"accuracy", r.accuracy},
        {"precision", r.precision},
        {"recall", r.recall},
        {"f1", r.f1},
        {"macro_f1", r.macro_f1},
        {"degenerate", r.degenerate},
        {"threshold", r.threshold},
        {"split", r.split},
    };
    if (!r.config_snapshot.is_null()) j["config"] = r.config_snapshot;
    if (include_per_sample) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : r.per_sample) {
            arr.push_back({{"id", s.id}, {"p_final", s.prob}, {"label", s.label}});
        }
        j["per_sample"] = arr;
    }
    return j;
}

inline std::string report_to_text(const MetricsReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "split: " << r.split << "  threshold: " << r.threshold << "\n";
    os << "confusion  tp=" << r.tp << " fp=" << r.fp << " tn=" << r.tn << " fn=" << r.fn << "\n";
    os << std::left
       << std::setw(12) << "accuracy" << std::setw(12) << "precision"
       << std::setw(12) << "recall" << std::setw(12) << "f1"
       << std::setw(12) << "macro_f1" << "\n";
    os << std::setw(12) << r.accuracy << std::setw(12) << r.precision
       << std::setw(12) << r.recall << std::setw(12) << r.f1
       << std::setw(12) << r.macro_f1 << "\n";
    if (r.degenerate) os << "note: a zero denominator was reported as 0\n";
    return os.str();
}

}  // namespace gdcnet
