#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdcnet/errors.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

enum class Split { train, val, test };

inline std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw IntegrityError("unknown split value: " + s);
}

// One image-text pair. The image is carried either as an inline feature
// vector or as a path resolvable against a stored-feature file.
struct Sample {
    std::string id;
    std::string text;
    std::optional<Vec> image_vec;
    std::optional<std::string> image_path;
    std::optional<std::string> caption;
    int label = 0;
    Split split = Split::train;

    bool has_caption() const { return caption.has_value() && !caption->empty(); }
};

struct CaptionRecord {
    std::string sample_id;
    std::string caption;
    std::string generator_name;
    std::int64_t created_at = 0;  // unix epoch seconds
};

struct DatasetManifest {
    std::vector<Sample> samples;
    // split name -> (count of label 0, count of label 1)
    std::map<std::string, std::pair<std::size_t, std::size_t>> class_counts;
    int schema_version = 1;

    void recount() {
        class_counts.clear();
        for (const auto& s : samples) {
            auto& c = class_counts[split_name(s.split)];
            if (s.label == 0) c.first++; else c.second++;
        }
    }
};

namespace detail {

inline std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline Sample sample_from_json(const nlohmann::json& j, std::size_t line_no) {
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError("line " + std::to_string(line_no) + ": " + msg);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    for (const char* key : {"id", "text", "label", "split"}) {
        if (!j.contains(key)) throw fail(std::string("missing key `") + key + "`");
    }
    Sample s;
    if (!j["id"].is_string()) throw fail("`id` must be a string");
    s.id = j["id"].get<std::string>();
    if (!j["text"].is_string()) throw fail("`text` must be a string");
    s.text = j["text"].get<std::string>();
    if (trimmed(s.text).empty()) throw fail("`text` is empty after trimming");
    const bool has_vec = j.contains("image_vec") && !j["image_vec"].is_null();
    const bool has_path = j.contains("image_path") && !j["image_path"].is_null();
    if (has_vec == has_path) throw fail("exactly one of `image_vec`/`image_path` required");
    if (has_vec) {
        if (!j["image_vec"].is_array()) throw fail("`image_vec` must be an array of numbers");
        Vec v;
        for (const auto& x : j["image_vec"]) {
            if (!x.is_number()) throw fail("`image_vec` must be an array of numbers");
            v.push_back(x.get<double>());
        }
        s.image_vec = std::move(v);
    } else {
        if (!j["image_path"].is_string()) throw fail("`image_path` must be a string");
        s.image_path = j["image_path"].get<std::string>();
    }
    if (j.contains("caption") && !j["caption"].is_null()) {
        if (!j["caption"].is_string()) throw fail("`caption` must be a string or null");
        s.caption = j["caption"].get<std::string>();
    }
    if (!j["label"].is_number_integer()) throw fail("`label` must be 0 or 1");
    const int label = j["label"].get<int>();
    if (label != 0 && label != 1) throw fail("`label` must be 0 or 1");
    s.label = label;
    if (!j["split"].is_string()) throw fail("`split` must be a string");
    s.split = parse_split(j["split"].get<std::string>());
    return s;
}

inline nlohmann::json sample_to_json(const Sample& s) {
    nlohmann::json j;
    j["id"] = s.id;
    j["text"] = s.text;
    if (s.image_vec) j["image_vec"] = *s.image_vec;
    if (s.image_path) j["image_path"] = *s.image_path;
    j["caption"] = s.caption ? nlohmann::json(*s.caption) : nlohmann::json(nullptr);
    j["label"] = s.label;
    j["split"] = split_name(s.split);
    return j;
}

}  // namespace detail

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    DatasetManifest m;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trimmed(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        Sample s = detail::sample_from_json(j, line_no);
        if (!ids.insert(s.id).second) {
            throw IntegrityError("duplicate sample id: " + s.id);
        }
        m.samples.push_back(std::move(s));
    }
    m.recount();
    return m;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file: " + path);
    for (const auto& s : m.samples) {
        out << detail::sample_to_json(s).dump() << '\n';
    }
}

// Attach captions; duplicate sample_ids resolved latest-by-created_at.
// Returns a new manifest, inputs untouched.
inline DatasetManifest attach_captions(const DatasetManifest& manifest,
                                       const std::vector<CaptionRecord>& captions) {
    std::set<std::string> known;
    for (const auto& s : manifest.samples) known.insert(s.id);
    std::vector<std::string> dangling;
    std::map<std::string, const CaptionRecord*> winner;
    for (const auto& r : captions) {
        if (!known.count(r.sample_id)) {
            dangling.push_back(r.sample_id);
            continue;
        }
        auto it = winner.find(r.sample_id);
        if (it == winner.end() || r.created_at >= it->second->created_at) {
            winner[r.sample_id] = &r;
        }
    }
    if (!dangling.empty()) {
        std::sort(dangling.begin(), dangling.end());
        dangling.erase(std::unique(dangling.begin(), dangling.end()), dangling.end());
        std::string msg = "caption records reference unknown sample ids:";
        for (const auto& id : dangling) msg += " " + id;
        throw IntegrityError(msg);
    }
    DatasetManifest out = manifest;
    for (auto& s : out.samples) {
        auto it = winner.find(s.id);
        if (it != winner.end()) s.caption = it->second->caption;
    }
    return out;
}

using Batch = std::vector<std::size_t>;  // indices into manifest.samples

// Deterministic shuffle keyed by (seed, epoch). The final short batch is
// kept so evaluation and Eq.-style 1/B normalization see every sample.
inline std::vector<Batch> make_batches(const DatasetManifest& manifest, Split split,
                                       std::size_t batch_size, std::uint64_t seed,
                                       std::uint64_t epoch = 0) {
    if (batch_size < 2) {
        throw ConfigError("batch_size must be >= 2 (contrastive loss needs in-batch negatives)");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
        if (manifest.samples[i].split == split) idx.push_back(i);
    }
    if (idx.empty()) throw ConfigError("split `" + split_name(split) + "` is empty");
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + epoch + 1);
    // Fisher-Yates by hand: std::shuffle's permutation is not pinned by the standard.
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

}  // namespace gdcnet
