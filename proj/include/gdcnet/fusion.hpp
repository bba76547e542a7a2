#pragma once

#include <random>

#include "gdcnet/errors.hpp"
#include "gdcnet/tensor.hpp"

namespace gdcnet {

// Scalar linear classifier over a fusion-space feature.
struct LinearClassifier {
    Vec weight;
    double bias = 0.0;

    double logit(const Vec& f) const { return dot(weight, f) + bias; }
};

// Gated fusion (sigmoid gates, no bias) plus the four-classifier head.
struct FusionParams {
    Mat proj_text, proj_image, proj_disc;  // into fusion space d_fused
    Vec proj_text_b, proj_image_b, proj_disc_b;
    Mat gate_text, gate_image, gate_disc;  // d_fused x d_fused
    LinearClassifier clf_text, clf_image, clf_disc, clf_fused;
    Mat head_w1;  // hidden x 4
    Vec head_b1;
    Vec head_w2;  // hidden
    double head_b2 = 0.0;

    static FusionParams init(std::size_t d_z, std::size_t d_f, std::size_t d_fused,
                             std::size_t head_hidden, std::mt19937_64& rng) {
        FusionParams p;
        auto uniform_fill = [&rng](Mat& m, std::size_t fan_in) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (double& w : m.data) w = u(rng);
        };
        auto uniform_fill_vec = [&rng](Vec& v, std::size_t fan_in) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (double& w : v) w = u(rng);
        };
        p.proj_text = Mat(d_fused, d_z); uniform_fill(p.proj_text, d_z);
        p.proj_image = Mat(d_fused, d_z); uniform_fill(p.proj_image, d_z);
        p.proj_disc = Mat(d_fused, d_f); uniform_fill(p.proj_disc, d_f);
        p.proj_text_b = Vec(d_fused, 0.0);
        p.proj_image_b = Vec(d_fused, 0.0);
        p.proj_disc_b = Vec(d_fused, 0.0);
        p.gate_text = Mat(d_fused, d_fused); uniform_fill(p.gate_text, d_fused);
        p.gate_image = Mat(d_fused, d_fused); uniform_fill(p.gate_image, d_fused);
        p.gate_disc = Mat(d_fused, d_fused); uniform_fill(p.gate_disc, d_fused);
        for (LinearClassifier* c : {&p.clf_text, &p.clf_image, &p.clf_disc, &p.clf_fused}) {
            c->weight = Vec(d_fused, 0.0);
            uniform_fill_vec(c->weight, d_fused);
            c->bias = 0.0;
        }
        p.head_w1 = Mat(head_hidden, 4); uniform_fill(p.head_w1, 4);
        p.head_b1 = Vec(head_hidden, 0.0);
        p.head_w2 = Vec(head_hidden, 0.0); uniform_fill_vec(p.head_w2, head_hidden);
        p.head_b2 = 0.0;
        return p;
    }
};

// g = sigmoid(W f), elementwise, strictly inside (0,1).
inline Vec gate(const Mat& w, const Vec& f) {
    Vec g = matvec(w, f);
    for (double& x : g) x = sigmoid(x);
    return g;
}

// F_fused = g_T . F_T + g_I . F_I + g_D . F_D
inline Vec fuse(const Vec& f_text, const Vec& f_image, const Vec& f_disc,
                const FusionParams& params) {
    if (f_text.size() != f_image.size() || f_text.size() != f_disc.size()) {
        throw ShapeError("fuse: fusion-space dimension mismatch");
    }
    const Vec g_t = gate(params.gate_text, f_text);
    const Vec g_i = gate(params.gate_image, f_image);
    const Vec g_d = gate(params.gate_disc, f_disc);
    Vec out(f_text.size(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = g_t[k] * f_text[k] + g_i[k] * f_image[k] + g_d[k] * f_disc[k];
    }
    return out;
}

// logits_all order is fixed: (text, image, discrepancy, fused). With the
// GDRM ablated the discrepancy logit is dropped (arity 3 into the head,
// realized by zeroing its slot and its gradient path).
inline double predict(const Vec& f_text, const Vec& f_image, const Vec& f_disc,
                      const Vec& f_fused, const FusionParams& params,
                      bool include_disc = true) {
    Vec logits{
        params.clf_text.logit(f_text),
        params.clf_image.logit(f_image),
        include_disc ? params.clf_disc.logit(f_disc) : 0.0,
        params.clf_fused.logit(f_fused),
    };
    Vec h = matvec(params.head_w1, logits);
    add_inplace(h, params.head_b1);
    for (double& x : h) x = std::max(0.0, x);
    return sigmoid(dot(params.head_w2, h) + params.head_b2);
}

}  // namespace gdcnet
