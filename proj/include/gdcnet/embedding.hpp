#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>

#include <json.hpp>

#include "gdcnet/data.hpp"
#include "gdcnet/errors.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

enum class Space { text_raw, image_raw, shared };

struct EmbeddingVector {
    Vec values;
    Space space = Space::shared;

    std::size_t dimension() const { return values.size(); }
};

namespace detail {

// FNV-1a, pinned so hashed features are identical across platforms.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// Signed feature hashing over lowercased alphanumeric tokens, L2-normalized.
// Empty or all-cancelled accumulation returns the zero vector unnormalized.
inline EmbeddingVector encode_text_hashed(const std::string& text, std::size_t dim) {
    if (dim < 8) throw ConfigError("encode_text_hashed: dim must be >= 8");
    Vec acc(dim, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const std::uint64_t h = detail::fnv1a(token);
        const std::size_t idx = static_cast<std::size_t>(h % dim);
        const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
        acc[idx] += sign;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    const double n = norm2(acc);
    if (n > 0.0) {
        for (double& x : acc) x /= n;
    }
    return EmbeddingVector{std::move(acc), Space::text_raw};
}

// Stored-feature lookup for samples that reference images by path.
class FeatureStore {
public:
    FeatureStore() = default;

    static FeatureStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open feature file: " + path);
        FeatureStore store;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::trimmed(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError("feature file line " + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.contains("path") || !j.contains("vec")) {
                throw ParseError("feature file line " + std::to_string(line_no) +
                                 ": expected keys `path` and `vec`");
            }
            store.features_[j["path"].get<std::string>()] = j["vec"].get<Vec>();
        }
        return store;
    }

    const Vec* find(const std::string& path) const {
        auto it = features_.find(path);
        return it == features_.end() ? nullptr : &it->second;
    }

private:
    std::map<std::string, Vec> features_;
};

inline EmbeddingVector encode_image_passthrough(const Sample& sample,
                                                const FeatureStore* store = nullptr) {
    if (sample.image_vec) {
        return EmbeddingVector{*sample.image_vec, Space::image_raw};
    }
    if (sample.image_path && store) {
        if (const Vec* v = store->find(*sample.image_path)) {
            return EmbeddingVector{*v, Space::image_raw};
        }
    }
    throw DataError("sample `" + sample.id + "`: image feature unresolvable");
}

// Learnable linear map between embedding spaces.
struct ProjectionHead {
    Mat weight;  // d_out x d_in
    Vec bias;    // d_out
    Space input_space = Space::text_raw;
    Space output_space = Space::shared;

    // Fan-in uniform init, zero bias.
    static ProjectionHead init(std::size_t d_in, std::size_t d_out, Space in, Space out,
                               std::mt19937_64& rng) {
        ProjectionHead h;
        h.weight = Mat(d_out, d_in);
        h.bias = Vec(d_out, 0.0);
        h.input_space = in;
        h.output_space = out;
        const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& w : h.weight.data) w = u(rng);
        return h;
    }
};

inline EmbeddingVector project(const ProjectionHead& head, const EmbeddingVector& h) {
    if (h.space != head.input_space) throw ShapeError("project: input space mismatch");
    Vec z = matvec(head.weight, h.values);
    add_inplace(z, head.bias);
    return EmbeddingVector{std::move(z), head.output_space};
}

}  // namespace gdcnet
